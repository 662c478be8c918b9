#pragma once

#include "bc/provers.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace bc {

class ProtocolError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

nlohmann::json encode_term(const Term &t);
Term decode_term(const nlohmann::json &j);
nlohmann::json encode_atom(const Atom &a);
Atom decode_atom(const nlohmann::json &j);
nlohmann::json encode_rule(const Rule &r);
Rule decode_rule(const nlohmann::json &j);
nlohmann::json encode_descriptor(const SupportDescriptor &d);
SupportDescriptor decode_descriptor(const nlohmann::json &j);
nlohmann::json encode_params(const ExpansionParams &p);
ExpansionParams decode_params(const nlohmann::json &j);

struct WorkMessage {
    enum class Type { Hello, Expand, Update, Err, Bye };
    Type type = Type::Bye;
    std::string worker; // hello
    std::string kb;     // hello, expand
    std::string req;    // expand, update, err
    std::optional<Atom> goal;
    ExpansionParams params;
    std::optional<PartialDerivation> derivation;
    bool done = true;
    std::string msg;
};

/// One JSON object, no trailing newline.
std::string encode_message(const WorkMessage &m);
/// Throws ProtocolError on malformed or truncated frames.
WorkMessage decode_message(const std::string &line);

} // namespace bc
