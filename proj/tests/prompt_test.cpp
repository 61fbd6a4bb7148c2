#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "blendkg/prompt.hpp"
#include "test_util.hpp"

using namespace blendkg;
using namespace blendkg::prompt;

namespace {

const TemplateSet& templates() {
  static const TemplateSet t = TemplateSet::load(blendkg::testing::source_dir() / "templates");
  return t;
}

rdf::Graph skg() { return rdf::parse_turtle(blendkg::testing::slurp(blendkg::testing::fixture("crime_skg.ttl"))); }

const std::string kSentence = "Crime has infected communities everywhere";

std::string text_of(const llm::ChatRequest& req) {
  std::string out;
  for (const auto& m : req.messages) out += m.text + "\n";
  return out;
}

std::string lag_text(const std::string& name) {
  auto cfg = preset(name, templates());
  std::optional<rdf::Graph> g;
  if (cfg.include_graph) g = skg();
  return text_of(build_text_prompt(kSentence, g, cfg, templates()));
}

std::set<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::set<std::string> out;
  for (std::string t; in >> t;) out.insert(t);
  return out;
}

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

const std::vector<std::string> kRequired = {"bl:Blending", "bl:Blendable", "bl:Blended",
                                            "cp:Attitude", "cp:Lens",      "metanet:isMetaphorical"};

}  // namespace

TEST(TextPrompt, Deterministic) {
  EXPECT_EQ(lag_text("LAG"), lag_text("LAG"));
  auto fresh = TemplateSet::load(blendkg::testing::source_dir() / "templates");
  EXPECT_EQ(fresh.fingerprint(), templates().fingerprint());
  EXPECT_EQ(templates().version(), "v1");
}

TEST(TextPrompt, LagMentionsEveryRequiredElement) {
  auto text = lag_text("LAG");
  for (const auto& name : kRequired) EXPECT_NE(text.find(name), std::string::npos) << name;
  EXPECT_NE(text.find(kSentence), std::string::npos);
}

TEST(TextPrompt, NoBlendingKeepsOnlyTheVerdictProperty) {
  auto text = lag_text("NoBlending");
  for (const auto& name : kRequired) {
    if (name == "metanet:isMetaphorical")
      EXPECT_NE(text.find(name), std::string::npos);
    else
      EXPECT_EQ(text.find(name), std::string::npos) << name;
  }
  EXPECT_EQ(text.find("bl:"), std::string::npos);
  EXPECT_EQ(text.find("cp:"), std::string::npos);
}

TEST(TextPrompt, NoGraphContainsNoSkgTriples) {
  auto g = skg();
  auto text = lag_text("NoGraph");
  const auto& pm = g.prefixes();
  for (const auto& t : g) {
    EXPECT_EQ(text.find(rdf::format_term(t.subject, pm)), std::string::npos) << rdf::format_term(t.subject, pm);
  }
  // the LAG prompt does carry them
  auto lag = lag_text("LAG");
  for (const auto& t : g) EXPECT_NE(lag.find(rdf::format_term(t.subject, pm)), std::string::npos);
}

TEST(TextPrompt, LagTokensCoverBothAblations) {
  auto lag = tokens(lag_text("LAG"));
  for (const char* name : {"NoBlending", "NoGraph"})
    for (const auto& tok : tokens(lag_text(name))) EXPECT_TRUE(lag.count(tok)) << name << ": " << tok;
}

TEST(TextPrompt, TargetWordClause) {
  auto cfg = preset("LAG", templates());
  EXPECT_EQ(text_of(build_text_prompt(kSentence, skg(), cfg, templates())).find("Focus on the word"),
            std::string::npos);
  cfg.target_word = "infected";
  EXPECT_NE(text_of(build_text_prompt(kSentence, skg(), cfg, templates())).find("Focus on the word \"infected\""),
            std::string::npos);
}

TEST(TextPrompt, RenderedGraphsParse) {
  // every fenced turtle block in the prompt is a self-contained document
  auto text = lag_text("LAG");
  std::size_t blocks = 0;
  for (auto pos = text.find("```turtle\n"); pos != std::string::npos; pos = text.find("```turtle\n", pos + 1)) {
    auto start = pos + 10;
    auto end = text.find("```", start);
    ASSERT_NE(end, std::string::npos);
    EXPECT_NO_THROW(rdf::parse_turtle(text.substr(start, end - start), rdf::PrefixMap{}));
    ++blocks;
  }
  EXPECT_EQ(blocks, 2u);
}

TEST(TextPrompt, WorkedExampleBlendIsStrictValid) {
  auto g = rdf::parse_turtle(worked_example(templates(), true));
  EXPECT_TRUE(ontology::validate_xkg(g, ontology::Level::Strict).passed);
  EXPECT_EQ(ontology::source_target(ontology::extract_blend(g)), std::make_pair(std::string("Food"), std::string("Ideas")));
}

TEST(TextPrompt, Preconditions) {
  auto cfg = preset("LAG", templates());
  EXPECT_THROW(build_text_prompt(kSentence, std::nullopt, cfg, templates()), ConfigError);
  EXPECT_THROW(preset("Bogus", templates()), ConfigError);
  EXPECT_THROW(preset("FewShot5", templates()), ConfigError);
  EXPECT_THROW(build_text_prompt(kSentence, std::nullopt, preset("FewShot3", templates()), templates()), ConfigError);
}

TEST(Render, Placeholders) {
  EXPECT_EQ(render("a {{x}} b", {{"x", "{{y}}"}}), "a {{y}} b");
  EXPECT_THROW(render("{{missing}}", {}), ConfigError);
  EXPECT_THROW(render("{{open", {}), ConfigError);
}

TEST(VisualPrompt, NoSentHasImageButNoCaption) {
  auto cfg = preset("NoSent", templates());
  std::string image = templates().visual_examples()[0].image;
  auto req = build_visual_prompt(image, std::string("CAPTION-MARKER"), skg(), cfg, templates());
  auto text = text_of(req);
  EXPECT_EQ(text.find("CAPTION-MARKER"), std::string::npos);
  EXPECT_EQ(text.find("Description of the image"), std::string::npos);
  ASSERT_FALSE(req.messages.back().images.empty());
  EXPECT_EQ(req.messages.back().images.front(), image);
  EXPECT_NE(req.messages.back().text.find("fred:crime_1"), std::string::npos);
}

TEST(VisualPrompt, NoImgHasCaptionAndGraphOnly) {
  auto cfg = preset("NoImg", templates());
  auto req = build_visual_prompt(std::nullopt, std::string("CAPTION-MARKER"), skg(), cfg, templates());
  for (const auto& m : req.messages) EXPECT_TRUE(m.images.empty());
  EXPECT_NE(req.messages.back().text.find("CAPTION-MARKER"), std::string::npos);
  EXPECT_NE(req.messages.back().text.find("fred:crime_1"), std::string::npos);
}

TEST(VisualPrompt, ThreeExamplesWithAnswers) {
  auto cfg = preset("SentImg", templates());
  auto image = templates().visual_examples()[1].image;
  auto req = build_visual_prompt(image, std::string("cap"), skg(), cfg, templates());
  std::size_t answers = 0;
  for (const auto& m : req.messages)
    if (m.role == llm::Role::Assistant) {
      ++answers;
      auto g = rdf::parse_turtle(llm::extract_turtle_block(m.text));
      EXPECT_TRUE(ontology::extract_verdict(g).metaphorical);
    }
  EXPECT_EQ(answers, 3u);
  auto text = text_of(req);
  for (const auto& name : kRequired) EXPECT_NE(text.find(name), std::string::npos) << name;
  EXPECT_NE(text.find("dangerous"), std::string::npos);

  cfg.few_shot.pop_back();
  EXPECT_THROW(build_visual_prompt(image, std::string("cap"), skg(), cfg, templates()), ConfigError);
}

TEST(VisualPrompt, AblationsAndChannels) {
  auto image = templates().visual_examples()[2].image;
  auto no_blend = text_of(build_visual_prompt(image, std::nullopt, skg(), preset("VisualNoBlending", templates()), templates()));
  EXPECT_EQ(no_blend.find("bl:"), std::string::npos);
  EXPECT_NE(no_blend.find("metanet:isMetaphorical"), std::string::npos);
  auto no_graph = text_of(build_visual_prompt(image, std::nullopt, std::nullopt, preset("VisualNoGraph", templates()), templates()));
  EXPECT_EQ(no_graph.find("fred:crime_1"), std::string::npos);

  auto cfg = preset("NoSent", templates());
  cfg.include_image = false;
  EXPECT_THROW(build_visual_prompt(image, std::nullopt, skg(), cfg, templates()), ConfigError);
  EXPECT_THROW(build_visual_prompt(std::nullopt, std::nullopt, skg(), preset("NoSent", templates()), templates()),
               ConfigError);
}

TEST(FewShot, Counts) {
  auto zero = text_of(build_fewshot_baseline(kSentence, 0, templates()));
  EXPECT_EQ(occurrences(zero, "Example "), 0u);
  EXPECT_NE(zero.find("metanet:isMetaphorical"), std::string::npos);
  EXPECT_EQ(zero.find("bl:"), std::string::npos);
  EXPECT_EQ(occurrences(text_of(build_fewshot_baseline(kSentence, 3, templates())), "Example "), 3u);
  EXPECT_THROW(build_fewshot_baseline(kSentence, 13, templates()), ConfigError);
}

TEST(FewShot, SixShotSetIsPrefixOfTwelve) {
  auto blocks = [](const std::string& text) {
    std::vector<std::string> out;
    for (auto pos = text.find("Example "); pos != std::string::npos; pos = text.find("Example ", pos + 1))
      out.push_back(text.substr(pos, text.find("```\n", text.find("```turtle", pos) + 3) - pos));
    return out;
  };
  auto six = blocks(text_of(build_fewshot_baseline(kSentence, 6, templates())));
  auto twelve = blocks(text_of(build_fewshot_baseline(kSentence, 12, templates())));
  ASSERT_EQ(six.size(), 6u);
  ASSERT_EQ(twelve.size(), 12u);
  EXPECT_TRUE(std::equal(six.begin(), six.end(), twelve.begin()));
}

TEST(Caption, FixedTemplate) {
  EXPECT_FALSE(caption_prompt(templates()).empty());
  EXPECT_NE(repair_instruction(templates()).find("fenced turtle block"), std::string::npos);
}

TEST(PrunePrefixes, KeepsOnlyUsedBindings) {
  auto g = skg();
  auto text = render_graph(g);
  EXPECT_EQ(text.find("@prefix bl:"), std::string::npos);
  EXPECT_NE(text.find("@prefix fred:"), std::string::npos);
  EXPECT_EQ(rdf::parse_turtle(text, rdf::PrefixMap{}), g);
}
