#include "sessionml/syntax.hpp"

#include <gtest/gtest.h>

#include <string>
#include <vector>

namespace sessionml::testing {
namespace {

std::vector<Tok> kinds(const std::string& src) {
  std::vector<Tok> out;
  for (auto& t : tokenize(src)) out.push_back(t.kind);
  return out;
}

TEST(TokenizeTest, KeywordsIdentifiersAndPunctuation) {
  EXPECT_EQ(kinds("fn x => send p x; recv p"),
            (std::vector<Tok>{Tok::Fn, Tok::Ident, Tok::Arrow, Tok::Send, Tok::Ident, Tok::Ident, Tok::Semi,
                              Tok::Recv, Tok::Ident}));
}

TEST(TokenizeTest, ChoiceLabelsAreUpperCase) {
  auto toks = tokenize("select SWAP p");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[1].kind, Tok::CLabel);
  EXPECT_EQ(toks[1].text, "SWAP");
}

TEST(TokenizeTest, CommentsAreSkippedAndSpansTracked) {
  auto toks = tokenize("-- comment\n  42");
  ASSERT_EQ(toks.size(), 1u);
  EXPECT_EQ(toks[0].kind, Tok::Int);
  EXPECT_EQ(toks[0].value, 42);
  EXPECT_EQ(toks[0].span.line, 2);
  EXPECT_EQ(toks[0].span.col, 3);
}

TEST(ParseTest, InfixOperatorsBecomePrimitiveApplications) {
  EXPECT_EQ(pretty(parse_program("let val x = 1 + 2 in (x, true)")), "(let val x = (add (1, 2)) in (x, true) end)");
}

TEST(ParseTest, SequencingIsALetWithWildcard) {
  ExprP e = parse_program("send p 1; recv p");
  ASSERT_EQ(e->tag, ExprTag::Let);
  EXPECT_EQ(e->param, "_");
}

TEST(ParseTest, CaseCollectsBranches) {
  ExprP e = parse_program("case p { A: 1, B: 2 }");
  ASSERT_EQ(e->tag, ExprTag::Case);
  ASSERT_EQ(e->branches.size(), 2u);
  EXPECT_EQ(e->branches[0].first, "A");
  EXPECT_EQ(e->branches[1].first, "B");
}

TEST(ParseTest, FunIsAFixpoint) {
  ExprP e = parse_program("let fun f(x) = f x in f 1");
  ASSERT_EQ(e->tag, ExprTag::Let);
  ASSERT_EQ(e->a->tag, ExprTag::Fix);
  EXPECT_EQ(e->a->fname, "f");
  EXPECT_EQ(e->a->param, "x");
}

TEST(ParseTest, ErrorsCarryPositions) {
  try {
    parse_program("let val = 3");
    FAIL() << "expected a syntax error";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.span.line, 1);
    EXPECT_EQ(e.span.col, 9);
  }
  EXPECT_THROW(parse_program(""), SyntaxError);
  EXPECT_THROW(parse_program("(1, 2, 3)"), SyntaxError);
}

TEST(AnnotateTest, LabelsAreAssignedLeftToRight) {
  ExprP e = annotate(parse_program("(request c (), (accept c (), fn p => resume p))"));
  EXPECT_EQ(count_label_sites(e), 3);
  // (app (request c) ()) for the first component.
  EXPECT_EQ(e->a->a->label, 1u);
  EXPECT_EQ(e->b->a->a->label, 2u);
  EXPECT_EQ(e->b->b->a->a->label, 3u);
}

TEST(AnnotateTest, StripLabelsUndoesAnnotation) {
  ExprP e = parse_program("let val p = request c () in send p 1");
  EXPECT_FALSE(structurally_equal(e, annotate(e)));
  EXPECT_TRUE(structurally_equal(e, strip_labels(annotate(e))));
}

TEST(PrettyTest, RoundTripsThroughTheParser) {
  for (const char* src : {"fn x => (x, x)", "if true then 1 else 2", "spawn (fn _ => ())",
                          "let val p = request c () in case p { A: send p 1, B: recv p }"}) {
    ExprP e = parse_program(src);
    EXPECT_TRUE(structurally_equal(e, parse_program(pretty(e)))) << src;
  }
}

}  // namespace
}  // namespace sessionml::testing
