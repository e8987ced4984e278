#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "overhyp/plot/svg.hpp"

using namespace overhyp;
using namespace overhyp::plot;

namespace {

std::vector<SummaryRow> full_summary() {
  std::vector<SummaryRow> rows;
  std::size_t id = 0;
  for (auto [w, s] : {std::pair{0.2, 0.0}, std::pair{0.3, 0.03}, std::pair{0.5, 0.0}})
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t l = 0; l < 3; ++l, ++id)
        for (std::size_t b = 1; b <= 4; ++b) {
          SummaryRow r;
          r.condition_id = id;
          r.domain_bias = kBiasClasses[d];
          r.label_bias = kBiasClasses[l];
          r.w = w;
          r.s = s;
          r.block = b;
          r.mean_accuracy = 0.8 + 0.01 * static_cast<double>(b) - 0.02 * static_cast<double>(l + d);
          r.se = 0.01;
          r.n = 75;
          rows.push_back(r);
        }
  return rows;
}

boost::property_tree::ptree parse(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree pt;
  boost::property_tree::read_xml(in, pt);
  return pt;
}

void collect_text(const boost::property_tree::ptree& node, std::vector<std::string>& out) {
  for (const auto& [name, child] : node) {
    if (name == "text") out.push_back(child.get_value<std::string>());
    collect_text(child, out);
  }
}

}  // namespace

TEST(Plot, BlockAveragesMeanAndSe) {
  const auto cells = block_averages(full_summary());
  ASSERT_EQ(cells.size(), 27u);
  // Blocks 1..4 add 0.01 * b, mean 0.025.
  EXPECT_NEAR(cells.front().mean, 0.825, 1e-12);
  EXPECT_NEAR(cells.front().se, std::sqrt(4 * 1e-4) / 4, 1e-12);
}

TEST(Plot, RendersFiveWellFormedFiles) {
  const auto files = render_all(full_summary());
  ASSERT_EQ(files.size(), 5u);
  std::set<std::string> names;
  for (const auto& f : files) {
    names.insert(f.name);
    const auto pt = parse(f.content);
    EXPECT_EQ(pt.count("svg"), 1u) << f.name;
  }
  EXPECT_TRUE(names.count("heatmap_w0.2_s0.svg"));
  EXPECT_TRUE(names.count("heatmap_w0.3_s0.03.svg"));
  EXPECT_TRUE(names.count("heatmap_w0.5_s0.svg"));
  EXPECT_TRUE(names.count("interaction.svg"));
  EXPECT_TRUE(names.count("dotplot.svg"));
}

TEST(Plot, HeatmapHasNineCellsLabelledToThreeDecimals) {
  const auto cells = block_averages(full_summary());
  const auto pt = parse(heatmap_svg(cells, 0.3, 0.03));
  std::size_t rects = 0;
  for (const auto& [name, child] : pt.get_child("svg"))
    if (name == "rect") ++rects;
  EXPECT_EQ(rects, 10u);  // background + 9 cells
  std::vector<std::string> texts;
  collect_text(pt, texts);
  for (const char* v : {"0.825", "0.805", "0.785", "0.765", "0.745"})
    EXPECT_NE(std::find(texts.begin(), texts.end(), v), texts.end()) << v;
}

TEST(Plot, DotplotHasOneRowPerCell) {
  const auto cells = block_averages(full_summary());
  const auto pt = parse(dotplot_svg(cells));
  std::size_t circles = 0;
  for (const auto& [name, child] : pt.get_child("svg"))
    if (name == "circle") ++circles;
  EXPECT_EQ(circles, 27u);
}

TEST(Plot, EmptySummaryIsAnError) {
  EXPECT_THROW(render_all({}), InvalidParameter);
  EXPECT_THROW(block_averages({}), InvalidParameter);
}

TEST(Plot, MissingSettingIsAnError) {
  const auto cells = block_averages(full_summary());
  EXPECT_THROW(heatmap_svg(cells, 0.9, 0.0), InvalidParameter);
}

TEST(Plot, EscapesMarkupInText) { EXPECT_EQ(svg_detail::escape("a<b&\"c\">"), "a&lt;b&amp;&quot;c&quot;&gt;"); }
