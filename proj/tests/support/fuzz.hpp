#pragma once

#include <random>
#include <string>
#include <vector>

namespace oracle {

/// Random parser input: token soup, raw bytes, or a mutated seed document.
inline std::string fuzz_input(std::mt19937_64 &rng, const std::vector<std::string> &seeds) {
    static const std::vector<std::string> tokens{
        "p", "q", "Zoey", "?x", "?y", "(", ")", ",", ".", ":-", "::", ":", "[", "]", "@r1", "0.9", "1.3",
        "-2", "causal", "template", "where", "except", "isa", ";", "\t", "\n", " ", "//", "#", "sk$x", "\"",
        "((((", "))", "?", "@", "1e9", "0.", ".5"};
    std::uniform_int_distribution<int> mode(0, 2);
    std::string out;
    switch (mode(rng)) {
    case 0: {
        const int n = std::uniform_int_distribution<int>(0, 40)(rng);
        for (int i = 0; i < n; ++i) out += tokens[std::uniform_int_distribution<std::size_t>(0, tokens.size() - 1)(rng)];
        break;
    }
    case 1: {
        const int n = std::uniform_int_distribution<int>(0, 80)(rng);
        for (int i = 0; i < n; ++i) out += static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
        break;
    }
    default: {
        out = seeds.empty() ? std::string{} : seeds[std::uniform_int_distribution<std::size_t>(0, seeds.size() - 1)(rng)];
        const int edits = std::uniform_int_distribution<int>(1, 6)(rng);
        for (int i = 0; i < edits && !out.empty(); ++i) {
            const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng);
            switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
            case 0: out.erase(pos, std::uniform_int_distribution<std::size_t>(1, 8)(rng)); break;
            case 1: out.insert(pos, tokens[std::uniform_int_distribution<std::size_t>(0, tokens.size() - 1)(rng)]); break;
            default: out[pos] = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
            }
        }
    }
    }
    return out;
}

} // namespace oracle
