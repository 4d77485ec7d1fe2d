#pragma once

#include <optional>
#include <string>
#include <vector>

namespace panelgmm {

enum class InstrumentStyle { iv, gmm };

// One instrument directive of the difference-GMM instrument grammar:
//
//   spec  := group+ ["collapse"]
//   group := ["D."] "(" term+ ")" | ["D."] term
//   term  := [outer] [lag] name
//   lag   := "L" [digits] "."              ("L." is lag 1)
//   outer := "L(" digits "/" [digits] ")."  |  lag
//
// A term with an outer operator is gmm-style (a range, or a single lag when
// two lag operators are stacked as in "L.L.llpr"); any other term is iv-style.
// "D." marks the enclosed iv terms as differenced.
struct InstrumentDirective {
    InstrumentStyle style = InstrumentStyle::iv;
    std::string base_variable;
    int inner_lag = 0;
    bool differenced = false;
    int lag_from = 1;             // gmm only
    std::optional<int> lag_to;    // gmm only; nullopt = unbounded
    bool collapsed = false;       // gmm only
    bool implicit = false;        // added automatically for the lagged dependent variable

    bool operator==(const InstrumentDirective&) const = default;
};

// Throws ParseError carrying the byte offset and the expected token.
std::vector<InstrumentDirective> parse_instrument_spec(const std::string& text);

// Canonical text form; parse_instrument_spec(render_instrument_spec(d)) == d
// for every parsed directive list.
std::string render_instrument_spec(const std::vector<InstrumentDirective>& directives);

std::string render_directive(const InstrumentDirective& d);

}  // namespace panelgmm
