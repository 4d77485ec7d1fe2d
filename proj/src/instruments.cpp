#include "panelgmm/instruments.hpp"

#include "panelgmm/errors.hpp"

#include <cctype>

namespace panelgmm {

namespace {

struct LagOp {
    bool range = false;
    int from = 1;
    std::optional<int> to;
};

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    std::vector<InstrumentDirective> run() {
        std::vector<InstrumentDirective> out;
        skip_ws();
        if (at_end()) fail("expected an instrument term or group");
        while (!at_end()) {
            if (keyword("collapse")) {
                skip_ws();
                if (!at_end()) fail("'collapse' must be the final keyword");
                for (auto& d : out)
                    if (d.style == InstrumentStyle::gmm) d.collapsed = true;
                break;
            }
            parse_group(out);
            skip_ws();
        }
        return out;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    bool at_end() const { return pos_ >= s_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }

    [[noreturn]] void fail(const std::string& expected) const {
        std::string found = at_end() ? "end of input" : std::string("'") + s_[pos_] + "'";
        throw ParseError("instrument spec: " + expected + ", found " + found, pos_);
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool keyword(const char* kw) {
        std::size_t n = std::char_traits<char>::length(kw);
        if (s_.compare(pos_, n, kw) != 0) return false;
        char after = pos_ + n < s_.size() ? s_[pos_ + n] : '\0';
        if (std::isalnum(static_cast<unsigned char>(after)) || after == '_' || after == '.') return false;
        pos_ += n;
        return true;
    }

    int digits() {
        std::size_t start = pos_;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("expected digits");
        return std::stoi(s_.substr(start, pos_ - start));
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    // "L." / "L3." / "L(1/)." at the cursor?
    bool lag_op_ahead() const {
        if (peek() != 'L') return false;
        std::size_t i = 1;
        if (peek(i) == '(') return true;
        while (std::isdigit(static_cast<unsigned char>(peek(i)))) ++i;
        return peek(i) == '.';
    }

    LagOp lag_op() {
        LagOp op;
        expect('L');
        if (peek() == '(') {
            ++pos_;
            op.range = true;
            op.from = digits();
            skip_ws();
            expect('/');
            skip_ws();
            if (std::isdigit(static_cast<unsigned char>(peek()))) op.to = digits();
            skip_ws();
            expect(')');
            expect('.');
            if (op.from < 1) throw ParseError("instrument spec: gmm lag range must start at 1 or later", pos_);
            if (op.to && *op.to < op.from)
                throw ParseError("instrument spec: gmm lag range upper bound below lower bound", pos_);
            return op;
        }
        op.from = std::isdigit(static_cast<unsigned char>(peek())) ? digits() : 1;
        op.to = op.from;
        expect('.');
        return op;
    }

    std::string name() {
        std::size_t start = pos_;
        if (!(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) fail("expected a variable name");
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        return s_.substr(start, pos_ - start);
    }

    InstrumentDirective term(bool differenced) {
        std::vector<LagOp> ops;
        while (lag_op_ahead()) {
            if (ops.size() == 2) fail("at most two lag operators per term");
            ops.push_back(lag_op());
        }
        InstrumentDirective d;
        d.base_variable = name();
        if (ops.size() == 2 || (ops.size() == 1 && ops[0].range)) {
            if (ops.size() == 2 && ops[1].range) fail("a lag range must be the outer operator");
            d.style = InstrumentStyle::gmm;
            d.lag_from = ops[0].from;
            d.lag_to = ops[0].to;
            d.inner_lag = ops.size() == 2 ? ops[1].from : 0;
            if (differenced) throw ParseError("instrument spec: gmm-style terms cannot appear inside D.(...)", pos_);
        } else {
            d.style = InstrumentStyle::iv;
            d.inner_lag = ops.empty() ? 0 : ops[0].from;
            d.differenced = differenced;
            d.lag_to = std::nullopt;
        }
        return d;
    }

    void parse_group(std::vector<InstrumentDirective>& out) {
        bool differenced = false;
        if (peek() == 'D' && (peek(1) == '.')) {
            pos_ += 2;
            differenced = true;
        }
        if (peek() == '(') {
            ++pos_;
            skip_ws();
            if (peek() == ')') fail("expected at least one term in group");
            while (peek() != ')') {
                if (at_end()) fail("expected ')'");
                out.push_back(term(differenced));
                skip_ws();
            }
            ++pos_;
            return;
        }
        out.push_back(term(differenced));
    }
};

std::string lag_prefix(int lag) {
    if (lag == 0) return "";
    if (lag == 1) return "L.";
    return "L" + std::to_string(lag) + ".";
}

}  // namespace

std::vector<InstrumentDirective> parse_instrument_spec(const std::string& text) {
    return Parser(text).run();
}

std::string render_directive(const InstrumentDirective& d) {
    if (d.style == InstrumentStyle::iv) return lag_prefix(d.inner_lag) + d.base_variable;
    std::string outer;
    if (d.lag_to && *d.lag_to == d.lag_from && d.inner_lag > 0)
        outer = lag_prefix(d.lag_from);
    else
        outer = "L(" + std::to_string(d.lag_from) + "/" + (d.lag_to ? std::to_string(*d.lag_to) : "") + ").";
    return outer + lag_prefix(d.inner_lag) + d.base_variable;
}

std::string render_instrument_spec(const std::vector<InstrumentDirective>& directives) {
    std::string out;
    bool any_collapsed = false;
    auto append = [&](const std::string& piece) {
        if (!out.empty()) out += ' ';
        out += piece;
    };
    for (std::size_t i = 0; i < directives.size();) {
        const auto& d = directives[i];
        if (d.style == InstrumentStyle::iv && d.differenced) {
            std::string group = "D.(";
            std::size_t j = i;
            for (; j < directives.size() && directives[j].style == InstrumentStyle::iv && directives[j].differenced; ++j)
                group += (j == i ? "" : " ") + render_directive(directives[j]);
            append(group + ")");
            i = j;
            continue;
        }
        any_collapsed = any_collapsed || (d.style == InstrumentStyle::gmm && d.collapsed);
        append(render_directive(d));
        ++i;
    }
    if (any_collapsed) append("collapse");
    return out;
}

}  // namespace panelgmm
