#include "bc/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace bc {

std::string format_diagnostic(const std::string &file, const ParseDiagnostic &d) {
    return file + ":" + std::to_string(d.line) + ":" + std::to_string(d.column) + ": " +
           (d.is_error() ? "error: " : "warning: ") + d.message;
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

struct Token {
    enum class Kind {
        Ident, Var, Number, LParen, RParen, Comma, Dot, Neck, DColon, Colon, Semi,
        LBracket, RBracket, At, Bad, End
    };
    Kind kind = Kind::End;
    std::string text;
    int line = 1;
    int col = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < s.size(); ++k, ++i) {
            if (s[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < s.size()) {
        const char c = s[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
            while (i < s.size() && s[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        auto single = [&](Token::Kind k) {
            t.kind = k;
            t.text = std::string(1, c);
            advance(1);
        };
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < s.size() && ident_char(s[j])) ++j;
            t.kind = Token::Kind::Ident;
            t.text = std::string(s.substr(i, j - i));
            advance(j - i);
        } else if (c == '?') {
            std::size_t j = i + 1;
            if (j < s.size() && ident_start(s[j])) {
                while (j < s.size() && ident_char(s[j])) ++j;
                t.kind = Token::Kind::Var;
                t.text = std::string(s.substr(i + 1, j - i - 1));
            } else {
                t.kind = Token::Kind::Bad;
                t.text = "?";
            }
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            t.kind = Token::Kind::Number;
            t.text = std::string(s.substr(i, j - i));
            advance(j - i);
        } else if (c == ':') {
            if (i + 1 < s.size() && s[i + 1] == '-') {
                t.kind = Token::Kind::Neck;
                t.text = ":-";
                advance(2);
            } else if (i + 1 < s.size() && s[i + 1] == ':') {
                t.kind = Token::Kind::DColon;
                t.text = "::";
                advance(2);
            } else {
                single(Token::Kind::Colon);
            }
        } else if (c == '(') {
            single(Token::Kind::LParen);
        } else if (c == ')') {
            single(Token::Kind::RParen);
        } else if (c == ',') {
            single(Token::Kind::Comma);
        } else if (c == '.') {
            single(Token::Kind::Dot);
        } else if (c == ';') {
            single(Token::Kind::Semi);
        } else if (c == '[') {
            single(Token::Kind::LBracket);
        } else if (c == ']') {
            single(Token::Kind::RBracket);
        } else if (c == '@') {
            single(Token::Kind::At);
        } else {
            single(Token::Kind::Bad);
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::Kind::End;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

// ---------------------------------------------------------------------------
// Parser

struct Failure {};

class Parser {
  public:
    explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

    std::vector<ParseDiagnostic> diags;

    const Token &peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    bool at(Token::Kind k) const { return peek().kind == k; }
    bool at_end() const { return at(Token::Kind::End); }
    bool at_word(std::string_view w) const { return at(Token::Kind::Ident) && peek().text == w; }
    Token next() {
        Token t = peek();
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool accept(Token::Kind k) {
        if (!at(k)) return false;
        next();
        return true;
    }

    [[noreturn]] void fail(const Token &t, std::string msg) {
        error(t, std::move(msg));
        throw Failure{};
    }
    void error(const Token &t, std::string msg) {
        diags.push_back({t.line, t.col, std::move(msg), ParseDiagnostic::Severity::Error});
    }
    void warning(const Token &t, std::string msg) {
        diags.push_back({t.line, t.col, std::move(msg), ParseDiagnostic::Severity::Warning});
    }

    Token expect(Token::Kind k, const char *what) {
        if (!at(k)) fail(peek(), std::string("expected ") + what + describe(peek()));
        return next();
    }

    static std::string describe(const Token &t) {
        if (t.kind == Token::Kind::End) return ", found end of input";
        return ", found '" + t.text + "'";
    }

    /// Skip past the next '.' (or to end of input).
    void recover() {
        while (!at_end() && !at(Token::Kind::Dot)) next();
        accept(Token::Kind::Dot);
    }

    Term term(int depth = 0) {
        if (depth > 200) fail(peek(), "term nesting too deep");
        if (at(Token::Kind::Var)) return Term::variable(next().text);
        if (!at(Token::Kind::Ident)) fail(peek(), "expected term" + describe(peek()));
        Token name = next();
        if (!accept(Token::Kind::LParen)) return Term::constant(name.text);
        return Term::compound(name.text, args(depth + 1));
    }

    /// Argument list after '(' up to and including ')'.
    std::vector<Term> args(int depth) {
        std::vector<Term> out;
        if (at(Token::Kind::RParen)) fail(peek(), "expected term, found ')'");
        out.push_back(term(depth));
        while (at(Token::Kind::Comma)) {
            Token comma = next();
            if (!at(Token::Kind::Var) && !at(Token::Kind::Ident))
                fail(comma, "dangling ',': expected term" + describe(peek()));
            out.push_back(term(depth));
        }
        expect(Token::Kind::RParen, "',' or ')'");
        return out;
    }

    Atom atom() {
        if (!at(Token::Kind::Ident)) fail(peek(), "expected atom" + describe(peek()));
        Token name = next();
        Atom a{name.text, {}};
        if (accept(Token::Kind::LParen)) a.args = args(1);
        return a;
    }

    std::vector<Atom> atoms() {
        std::vector<Atom> out{atom()};
        while (at(Token::Kind::Comma)) {
            Token comma = next();
            if (!at(Token::Kind::Ident)) fail(comma, "dangling ',': expected atom" + describe(peek()));
            out.push_back(atom());
        }
        return out;
    }

    double confidence() {
        Token t = expect(Token::Kind::Number, "confidence");
        double v = 0.0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || p != t.text.data() + t.text.size())
            fail(t, "malformed number '" + t.text + "'");
        if (!(v > 0.0 && v <= 1.0)) fail(t, "confidence " + t.text + " outside (0,1]");
        return v;
    }

    std::set<std::string> tags() {
        std::set<std::string> out;
        expect(Token::Kind::LBracket, "'['");
        out.insert(expect(Token::Kind::Ident, "tag").text);
        while (accept(Token::Kind::Comma)) out.insert(expect(Token::Kind::Ident, "tag").text);
        expect(Token::Kind::RBracket, "',' or ']'");
        return out;
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

bool has_errors(const std::vector<ParseDiagnostic> &ds) {
    return std::any_of(ds.begin(), ds.end(), [](const auto &d) { return d.is_error(); });
}

struct Statement {
    std::optional<std::string> label;
    Token label_tok;
    std::optional<double> conf;
    std::set<std::string> tags;
    Token start;
    Atom head;
    std::vector<Atom> body;
    bool is_rule = false;
};

Statement parse_statement(Parser &p) {
    Statement st;
    st.start = p.peek();
    bool prefix = false;
    if (p.accept(Token::Kind::At)) {
        st.label_tok = p.peek();
        st.label = p.expect(Token::Kind::Ident, "rule id after '@'").text;
    }
    if (p.at(Token::Kind::Number)) {
        st.conf = p.confidence();
        prefix = true;
    }
    if (p.at(Token::Kind::LBracket)) {
        st.tags = p.tags();
        prefix = true;
    }
    if (prefix) {
        p.expect(Token::Kind::DColon, "'::'");
        if (p.at(Token::Kind::LBracket)) {
            auto more = p.tags();
            st.tags.insert(more.begin(), more.end());
        }
    } else {
        p.accept(Token::Kind::DColon);
    }
    st.head = p.atom();
    if (p.accept(Token::Kind::Neck)) {
        st.is_rule = true;
        st.body = p.atoms();
    }
    p.expect(Token::Kind::Dot, "'.' at end of statement");
    return st;
}

/// Parses every statement, collecting facts and rules. Rule ids are checked
/// for duplicates; unlabeled rules get `r<n>`.
void parse_clauses(Parser &p, std::vector<Fact> *facts, std::vector<Rule> &rules) {
    std::set<std::string> ids;
    std::vector<std::size_t> unlabeled;
    while (!p.at_end()) {
        try {
            Statement st = parse_statement(p);
            if (!st.is_rule) {
                if (!facts) {
                    p.error(st.start, "facts are not allowed here");
                    continue;
                }
                if (st.label) p.error(st.label_tok, "rule id on a fact");
                if (!st.tags.empty()) p.error(st.start, "tags on a fact");
                if (!st.head.is_ground()) {
                    p.error(st.start, "fact contains variables: " + to_string(st.head));
                    continue;
                }
                facts->push_back(Fact{st.head, st.conf.value_or(1.0),
                                      "line " + std::to_string(st.start.line)});
                continue;
            }
            Rule r;
            r.head = std::move(st.head);
            r.body = std::move(st.body);
            r.confidence = st.conf.value_or(1.0);
            r.tags = std::move(st.tags);
            r.refresh_existentials();
            if (st.label) {
                if (!ids.insert(*st.label).second) {
                    p.error(st.label_tok, "duplicate rule id '" + *st.label + "'");
                    continue;
                }
                r.id = *st.label;
            } else {
                unlabeled.push_back(rules.size());
            }
            rules.push_back(std::move(r));
        } catch (const Failure &) {
            p.recover();
        }
    }
    std::size_t n = 0;
    for (auto i : unlabeled) {
        std::string id;
        do {
            id = "r" + std::to_string(++n);
        } while (ids.count(id));
        ids.insert(id);
        rules[i].id = id;
    }
}

} // namespace

Parsed<KnowledgeBase> parse_kb(std::string_view text) {
    Parser p(text);
    std::vector<Fact> facts;
    std::vector<Rule> rules;
    parse_clauses(p, &facts, rules);
    Parsed<KnowledgeBase> out;
    out.diagnostics = std::move(p.diags);
    if (has_errors(out.diagnostics)) return out;
    KnowledgeBase kb;
    for (auto &f : facts) kb.add_fact(std::move(f));
    for (auto &r : rules) kb.add_rule(std::move(r));
    out.value = std::move(kb);
    return out;
}

Parsed<std::vector<Rule>> parse_rules(std::string_view text) {
    Parser p(text);
    std::vector<Rule> rules;
    parse_clauses(p, nullptr, rules);
    Parsed<std::vector<Rule>> out;
    out.diagnostics = std::move(p.diags);
    if (!has_errors(out.diagnostics)) out.value = std::move(rules);
    return out;
}

Parsed<Atom> parse_query(std::string_view text) {
    Parser p(text);
    Parsed<Atom> out;
    try {
        if (p.at_end()) p.fail(p.peek(), "empty query");
        auto conj = p.atoms();
        p.accept(Token::Kind::Dot);
        if (!p.at_end()) p.fail(p.peek(), "unexpected input after query" + Parser::describe(p.peek()));
        out.value = make_conjunction(conj);
    } catch (const Failure &) {
    }
    out.diagnostics = std::move(p.diags);
    if (has_errors(out.diagnostics)) out.value.reset();
    return out;
}

Parsed<std::vector<RuleTemplate>> parse_templates(std::string_view text) {
    Parser p(text);
    std::vector<RuleTemplate> out_templates;
    std::set<std::string> ids;

    auto constraint = [&p](std::vector<std::string> *vars) {
        Token v = p.expect(Token::Kind::Var, "'?variable'");
        p.expect(Token::Kind::Colon, "':'");
        Token type = p.expect(Token::Kind::Ident, "type name");
        if (vars) vars->push_back(v.text);
        return std::make_tuple(v, type.text);
    };

    while (!p.at_end()) {
        try {
            Token kw = p.peek();
            if (!p.at_word("template")) p.fail(kw, "expected 'template'" + Parser::describe(kw));
            p.next();
            Token id = p.expect(Token::Kind::Ident, "template id");
            RuleTemplate t;
            t.id = id.text;
            t.base_confidence = p.confidence();
            if (p.at(Token::Kind::LBracket)) t.tags = p.tags();
            p.expect(Token::Kind::Colon, "':'");
            t.pattern.id = t.id;
            t.pattern.head = p.atom();
            if (p.accept(Token::Kind::Neck)) t.pattern.body = p.atoms();
            t.pattern.confidence = t.base_confidence;
            t.pattern.tags = t.tags;
            t.pattern.provenance = "drg:template";
            t.pattern.refresh_existentials();

            std::vector<std::string> pattern_vars = vars_of(t.pattern.head);
            for (const auto &b : t.pattern.body)
                for (const auto &x : b.args) collect_vars(x, pattern_vars);
            auto check_var = [&](const Token &v) {
                if (std::find(pattern_vars.begin(), pattern_vars.end(), v.text) == pattern_vars.end())
                    p.error(v, "?" + v.text + " does not occur in template " + t.id);
            };

            if (p.at_word("where")) {
                p.next();
                do {
                    auto [v, type] = constraint(nullptr);
                    check_var(v);
                    if (!t.type_constraints.emplace(v.text, type).second)
                        p.error(v, "?" + v.text + " already has a type constraint");
                } while (p.accept(Token::Kind::Semi));
            }
            while (p.at_word("except")) {
                p.next();
                p.expect(Token::Kind::LParen, "'('");
                TypeBinding neg;
                do {
                    auto [v, type] = constraint(nullptr);
                    check_var(v);
                    neg[v.text] = type;
                } while (p.accept(Token::Kind::Comma));
                p.expect(Token::Kind::RParen, "',' or ')'");
                t.negative_bindings.push_back(std::move(neg));
            }
            p.expect(Token::Kind::Dot, "'.' at end of template");
            if (!ids.insert(t.id).second) {
                p.error(id, "duplicate template id '" + t.id + "'");
                continue;
            }
            out_templates.push_back(std::move(t));
        } catch (const Failure &) {
            p.recover();
        }
    }
    Parsed<std::vector<RuleTemplate>> out;
    out.diagnostics = std::move(p.diags);
    if (!has_errors(out.diagnostics)) out.value = std::move(out_templates);
    return out;
}

Parsed<TypeTaxonomy> parse_taxonomy(std::string_view text) {
    Parser p(text);
    TypeTaxonomy tax;
    while (!p.at_end()) {
        try {
            Token child = p.expect(Token::Kind::Ident, "type or symbol");
            Token kw = p.peek();
            if (!p.at_word("isa")) p.fail(kw, "expected 'isa'" + Parser::describe(kw));
            p.next();
            Token parent = p.expect(Token::Kind::Ident, "type");
            p.expect(Token::Kind::Dot, "'.'");
            if (!tax.add_edge(child.text, parent.text))
                p.error(child, "cycle: " + child.text + " isa " + parent.text);
        } catch (const Failure &) {
            p.recover();
        }
    }
    Parsed<TypeTaxonomy> out;
    out.diagnostics = std::move(p.diags);
    if (!has_errors(out.diagnostics)) out.value = std::move(tax);
    return out;
}

Parsed<TableSimilarity> parse_similarity_table(std::string_view text) {
    Parsed<TableSimilarity> out;
    TableSimilarity table;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        auto diag = [&](int col, std::string msg) {
            out.diagnostics.push_back({line_no, col, std::move(msg), ParseDiagnostic::Severity::Error});
        };
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto first = line.find_first_not_of(" \t");
        const bool skip = first == std::string_view::npos || line[first] == '#' ||
                          line.substr(first).rfind("//", 0) == 0;
        if (!skip) {
            std::vector<std::pair<std::size_t, std::string_view>> fields;
            std::size_t fs = 0;
            while (true) {
                auto tab = line.find('\t', fs);
                fields.emplace_back(fs, line.substr(fs, tab == std::string_view::npos ? tab : tab - fs));
                if (tab == std::string_view::npos) break;
                fs = tab + 1;
            }
            auto valid_symbol = [](std::string_view s) {
                if (s.empty() || !ident_start(s[0])) return false;
                return std::all_of(s.begin(), s.end(), ident_char);
            };
            if (fields.size() != 3) {
                diag(1, "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
            } else if (!valid_symbol(fields[0].second)) {
                diag(static_cast<int>(fields[0].first) + 1, "malformed symbol");
            } else if (!valid_symbol(fields[1].second)) {
                diag(static_cast<int>(fields[1].first) + 1, "malformed symbol");
            } else {
                auto sv = fields[2].second;
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
                const int col = static_cast<int>(fields[2].first) + 1;
                if (sv.empty() || ec != std::errc{} || ptr != sv.data() + sv.size())
                    diag(col, "malformed score");
                else if (!(v >= 0.0 && v <= 1.0))
                    diag(col, "score " + std::string(sv) + " outside [0,1]");
                else
                    table.set(std::string(fields[0].second), std::string(fields[1].second), v);
            }
        }
        if (end == text.size()) break;
        start = end + 1;
    }
    if (!has_errors(out.diagnostics)) out.value = std::move(table);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string tag_list(const std::set<std::string> &tags) {
    std::string s = "[";
    bool first = true;
    for (const auto &t : tags) {
        if (!first) s += ", ";
        s += t;
        first = false;
    }
    return s + "]";
}

std::string rule_line(const Rule &r) {
    std::string s = "@" + r.id + " " + format_real(r.confidence) + " ";
    if (!r.tags.empty()) s += tag_list(r.tags) + " ";
    return s + ":: " + to_string(r) + ".\n";
}

} // namespace

std::string serialize(const Atom &a) { return to_string(a); }

std::string serialize(const KnowledgeBase &kb) {
    std::string out;
    for (const auto &f : kb.facts()) out += format_real(f.confidence) + " :: " + to_string(f.atom) + ".\n";
    for (const auto &r : kb.rules()) out += rule_line(r);
    return out;
}

std::string serialize_rules(const std::vector<Rule> &rules) {
    std::string out;
    for (const auto &r : rules) out += rule_line(r);
    return out;
}

std::string serialize(const std::vector<RuleTemplate> &templates) {
    std::string out;
    for (const auto &t : templates) {
        out += "template " + t.id + " " + format_real(t.base_confidence);
        if (!t.tags.empty()) out += " " + tag_list(t.tags);
        out += " : " + to_string(t.pattern);
        if (!t.type_constraints.empty()) {
            out += " where ";
            bool first = true;
            for (const auto &[v, type] : t.type_constraints) {
                if (!first) out += "; ";
                out += "?" + v + " : " + type;
                first = false;
            }
        }
        for (const auto &neg : t.negative_bindings) {
            out += " except (";
            bool first = true;
            for (const auto &[v, type] : neg) {
                if (!first) out += ", ";
                out += "?" + v + " : " + type;
                first = false;
            }
            out += ")";
        }
        out += ".\n";
    }
    return out;
}

std::string serialize(const TypeTaxonomy &tax) {
    std::string out;
    for (const auto &[c, p] : tax.edges()) out += c + " isa " + p + ".\n";
    return out;
}

std::string serialize(const TableSimilarity &sim) {
    std::string out;
    for (const auto &[k, v] : sim.rows()) out += k.first + "\t" + k.second + "\t" + format_real(v) + "\n";
    return out;
}

} // namespace bc
