#include "panelgmm/errors.hpp"
#include "panelgmm/instruments.hpp"
#include "panelgmm/model.hpp"

#include <gtest/gtest.h>

using namespace panelgmm;

TEST(InstrumentGrammar, PrintedStringsRoundTrip) {
    const std::vector<std::string> printed{"D.(L2.roa L3.gdp L.inf L.size nplr)", "D.(L3.roe L2.gdp inf size nplr)",
                                           "D.(L2.nim L2.gdp size inf L.nplr L.car)", "L(1/).L3.llpr",
                                           "L(1/).L3.llpr", "L.L.llpr"};
    for (const auto& s : printed) {
        const auto d = parse_instrument_spec(s);
        EXPECT_EQ(render_instrument_spec(d), s);
        EXPECT_EQ(parse_instrument_spec(render_instrument_spec(d)), d);
    }
}

TEST(InstrumentGrammar, IvGroupFields) {
    const auto d = parse_instrument_spec("D.(L2.roa L3.gdp L.inf L.size nplr)");
    ASSERT_EQ(d.size(), 5u);
    EXPECT_EQ(d[0].base_variable, "roa");
    EXPECT_EQ(d[0].inner_lag, 2);
    EXPECT_TRUE(d[0].differenced);
    EXPECT_EQ(d[0].style, InstrumentStyle::iv);
    EXPECT_EQ(d[4].base_variable, "nplr");
    EXPECT_EQ(d[4].inner_lag, 0);
}

TEST(InstrumentGrammar, GmmTerms) {
    const auto open = parse_instrument_spec("L(1/).L3.llpr")[0];
    EXPECT_EQ(open.style, InstrumentStyle::gmm);
    EXPECT_EQ(open.inner_lag, 3);
    EXPECT_EQ(open.lag_from, 1);
    EXPECT_FALSE(open.lag_to.has_value());
    const auto single = parse_instrument_spec("L.L.llpr")[0];
    EXPECT_EQ(single.style, InstrumentStyle::gmm);
    EXPECT_EQ(single.inner_lag, 1);
    EXPECT_EQ(single.lag_from, 1);
    EXPECT_EQ(single.lag_to, 1);
    const auto ranged = parse_instrument_spec("L(2/4).y collapse")[0];
    EXPECT_EQ(ranged.lag_from, 2);
    EXPECT_EQ(ranged.lag_to, 4);
    EXPECT_TRUE(ranged.collapsed);
}

TEST(InstrumentGrammar, MixedSpec) {
    const auto d = parse_instrument_spec("D.(x1 L.x2) w L(2/).y");
    ASSERT_EQ(d.size(), 4u);
    EXPECT_TRUE(d[1].differenced);
    EXPECT_FALSE(d[2].differenced);
    EXPECT_EQ(d[3].style, InstrumentStyle::gmm);
    EXPECT_EQ(parse_instrument_spec(render_instrument_spec(d)), d);
}

TEST(InstrumentGrammar, ErrorsCarryOffsets) {
    const std::vector<std::pair<std::string, std::size_t>> bad{
        {"D.(roa", 6}, {"L(0/).y", 0}, {"L(3/2).y", 0}, {"", 0}, {"D.(L(1/).y)", 3}, {"L2.", 3}};
    for (const auto& [s, off] : bad) {
        try {
            parse_instrument_spec(s);
            ADD_FAILURE() << "accepted '" << s << "'";
        } catch (const ParseError& e) {
            EXPECT_LE(e.offset(), s.size()) << s;
            EXPECT_GE(e.offset(), off) << s << ": " << e.what();
        }
    }
}

TEST(TermRefs, ParseAndRender) {
    EXPECT_EQ(TermRef::parse("L2.size"), (TermRef{"size", 2}));
    EXPECT_EQ(TermRef::parse("L.y"), (TermRef{"y", 1}));
    EXPECT_EQ(TermRef::parse("x"), (TermRef{"x", 0}));
    EXPECT_EQ((TermRef{"y", 1}).str(), "L.y");
    EXPECT_EQ((TermRef{"y", 3}).str(), "L3.y");
    EXPECT_THROW(TermRef::parse("L.") , ValidationError);
}

TEST(TermRefs, LaggedValues) {
    auto p = PanelDataset::with_period_range({"a"}, 2001, 2004);
    p.set_series("v", {1.0, 2.0, kMissing, 4.0});
    EXPECT_DOUBLE_EQ(term_value(p, TermRef{"v", 1}, 0, 1), 1.0);
    EXPECT_TRUE(is_missing(term_value(p, TermRef{"v", 1}, 0, 0)));
    EXPECT_TRUE(is_missing(term_value(p, TermRef{"v", 1}, 0, 3)));
    EXPECT_DOUBLE_EQ(term_value(p, TermRef{"v", 2}, 0, 3), 2.0);
}
