#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "mlmn/parser/article_parser.hpp"

using namespace mlmn;
using namespace mlmn::parser;
using corpus::LabeledClauseRecord;

namespace {

    std::vector<std::string> texts(const std::vector<Clause>& cs) {
        std::vector<std::string> out;
        for (const auto& c : cs) out.push_back(c.text);
        return out;
    }

    std::string reassemble(const std::string& text, const std::vector<Clause>& cs) {
        std::string out;
        for (const auto& c : cs) out += text.substr(c.byte_begin, c.byte_end - c.byte_begin);
        return out;
    }

    std::vector<LabeledClauseRecord> zh_clauses() {
        return corpus::read_jsonl<LabeledClauseRecord>(std::string(MLMN_TEST_DATA) + "/clauses_zh.jsonl",
                                                       corpus::labeled_clause_from_json);
    }

    const std::string article_232 =
        "故意杀人的，处死刑、无期徒刑或者十年以上有期徒刑；情节较轻的，处三年以上十年以下有期徒刑。";

    // leaf-only tree that always answers `label`
    DecisionTree constant_tree(int label) {
        TreeNode leaf;
        leaf.counts = label == label_conclusion ? std::array<std::size_t, 2>{0, 1} : std::array<std::size_t, 2>{1, 0};
        return DecisionTree({leaf});
    }

}  // namespace

TEST(SplitClauses, TwoClauses) {
    const std::string t = "P，C。";
    auto cs = split_clauses(t);
    EXPECT_EQ(texts(cs), (std::vector<std::string>{"P", "C"}));
    EXPECT_EQ(reassemble(t, cs), t);
}

TEST(SplitClauses, NoDelimiterGivesOneClause) {
    const std::string t = "whoever drives a vehicle";
    auto cs = split_clauses(t);
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].text, t);
    EXPECT_EQ(cs[0].byte_begin, 0u);
    EXPECT_EQ(cs[0].byte_end, t.size());
}

TEST(SplitClauses, Article232HasFourClauses) {
    auto cs = split_clauses(article_232);
    EXPECT_EQ(texts(cs), (std::vector<std::string>{"故意杀人的", "处死刑、无期徒刑或者十年以上有期徒刑", "情节较轻的",
                                                   "处三年以上十年以下有期徒刑"}));
    EXPECT_EQ(reassemble(article_232, cs), article_232);
}

TEST(SplitClauses, EnumerationExceptions) {
    EXPECT_EQ(texts(split_clauses("一、盗窃的，处拘役")), (std::vector<std::string>{"一、盗窃的", "处拘役"}));
    EXPECT_EQ(texts(split_clauses("（二）醉酒驾驶的；")), (std::vector<std::string>{"（二）醉酒驾驶的"}));
    EXPECT_EQ(texts(split_clauses("1. fined 2.5 units, or 1,000 yuan")),
              (std::vector<std::string>{"1. fined 2.5 units", "or 1,000 yuan"}));
    // no conjunction: the 、 separates clauses
    EXPECT_EQ(texts(split_clauses("甲、乙、丙，丁")), (std::vector<std::string>{"甲", "乙", "丙", "丁"}));
    // conjunction anywhere in the chain keeps it whole
    EXPECT_EQ(texts(split_clauses("或者多次盗窃、入户盗窃、扒窃的，处拘役")),
              (std::vector<std::string>{"或者多次盗窃、入户盗窃、扒窃的", "处拘役"}));
}

TEST(SplitClauses, EmptyPiecesMerge) {
    const std::string t = "，P，，C；";
    auto cs = split_clauses(t);
    EXPECT_EQ(texts(cs), (std::vector<std::string>{"P", "C"}));
    EXPECT_EQ(cs[0].byte_begin, 0u);
    EXPECT_EQ(reassemble(t, cs), t);
}

TEST(SplitClauses, SyntheticArticle) {
    const std::string t = "if the actor kw001 kw002 , shall be sentenced to imprisonment of 4 years ; where the "
                          "circumstances are especially serious , shall be punished more severely .";
    auto cs = split_clauses(t);
    EXPECT_EQ(texts(cs), (std::vector<std::string>{"if the actor kw001 kw002", "shall be sentenced to imprisonment of 4 years",
                                                   "where the circumstances are especially serious",
                                                   "shall be punished more severely"}));
    EXPECT_EQ(reassemble(t, cs), t);
}

TEST(SplitClauses, SpansTileRandomText) {
    const std::vector<std::string> alphabet{"a", "b", " ", "1", "，", "；", "、", "。", ",", ".", "的", "或者", "一"};
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        std::string t;
        const std::size_t len = 1 + rng.below(30);
        for (std::size_t i = 0; i < len; ++i) t += alphabet[rng.below(alphabet.size())];
        auto cs = split_clauses(t);
        ASSERT_FALSE(cs.empty());
        EXPECT_EQ(reassemble(t, cs), t) << t;
        EXPECT_EQ(cs.front().byte_begin, 0u);
        for (std::size_t k = 1; k < cs.size(); ++k) {
            EXPECT_EQ(cs[k].byte_begin, cs[k - 1].byte_end) << t;
            EXPECT_LT(cs[k].byte_begin, cs[k].byte_end) << t;
        }
    }
}

TEST(ContainsTerm, RespectsAsciiWordBoundaries) {
    EXPECT_FALSE(contains_term("life imprisonment", "if"));
    EXPECT_TRUE(contains_term("if the actor", "if"));
    EXPECT_TRUE(contains_term("shall be sentenced to", "shall be sentenced"));
    EXPECT_TRUE(contains_term("故意杀人的", "的"));
}

TEST(Lexicon, ReadsSections) {
    std::istringstream is("# cues\n[premise]\nif\nwhere\n\n[conclusion]\nshall be sentenced\nif\n");
    auto lex = read_lexicon(is);
    EXPECT_EQ(lex.premise, (std::vector<std::string>{"if", "where"}));
    EXPECT_EQ(lex.conclusion, (std::vector<std::string>{"shall be sentenced", "if"}));
    std::ostringstream os;
    write_lexicon(os, lex);
    std::istringstream again(os.str());
    EXPECT_EQ(read_lexicon(again), lex);
}

TEST(Lexicon, RejectsKeywordOutsideSection) {
    std::istringstream a("if\n");
    EXPECT_THROW(read_lexicon(a), InputError);
    std::istringstream b("[other]\nx\n");
    EXPECT_THROW(read_lexicon(b), InputError);
}

TEST(Featurize, ConclusionKeywordIndicator) {
    Lexicon lex{{"if"}, {"shall be sentenced"}};
    corpus::WhitespaceTokenizer tok;
    auto f = featurize(make_clause("shall be sentenced to 3 years", tok), 1, 2, lex);
    ASSERT_EQ(f.size(), feature_width(lex));
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[1], 1.0);
    EXPECT_EQ(f[2], 1.0);  // relative position of the last clause
    EXPECT_EQ(f[3], 6.0);  // tokens
    EXPECT_EQ(f[4], 1.0);  // numeral
    EXPECT_EQ(f[5], 1.0);  // penalty unit
}

TEST(Featurize, FirstClausePositionZero) {
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    auto f = featurize(make_clause("if the actor", tok), 0, 4, lex);
    EXPECT_EQ(f[lex.size()], 0.0);
}

TEST(Featurize, EmptyLexiconHasNoKeywordBlock) {
    corpus::WhitespaceTokenizer tok;
    auto f = featurize(make_clause("where it is so", tok), 0, 1, Lexicon{});
    ASSERT_EQ(f.size(), extra_feature_count);
    EXPECT_EQ(f[2], 0.0);
}

TEST(Featurize, Deterministic) {
    corpus::WhitespaceCjkTokenizer tok;
    auto lex = default_lexicon();
    auto c = make_clause("处三年以下有期徒刑", tok);
    EXPECT_EQ(featurize(c, 2, 5, lex), featurize(c, 2, 5, lex));
}

TEST(Forest, SingleTreeEqualsItsTree) {
    auto data = corpus::generate_clause_corpus(4, 200);
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(data, lex, tok, {}, {.n_trees = 1, .seed = 9});
    ASSERT_EQ(forest.size(), 1u);
    for (const auto& e : corpus::generate_clause_corpus(5, 100)) {
        auto x = featurize(make_clause(e.text, tok), 0, 1, lex);
        EXPECT_EQ(forest.predict(x), forest.trees()[0].predict(x));
    }
}

TEST(Forest, SeparableTrainingAccuracyIsOne) {
    auto data = corpus::generate_clause_corpus(4, 300);
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(data, lex, tok, {}, {.n_trees = 25, .seed = 2});
    EXPECT_EQ(clause_accuracy(forest, data, lex, tok), 1.0);
}

TEST(Forest, HeldOutAccuracy) {
    auto train = corpus::generate_clause_corpus(4, 300);
    auto test = corpus::generate_clause_corpus(40, 300);
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(train, lex, tok, {}, {.n_trees = 25, .seed = 2});
    EXPECT_GE(clause_accuracy(forest, test, lex, tok), 0.95);
}

TEST(Forest, VoteRules) {
    const std::vector<double> x{0.0};
    RandomForest all_premise(1, {}, {constant_tree(0), constant_tree(0), constant_tree(0)});
    EXPECT_EQ(all_premise.predict(x), label_premise);
    RandomForest two_one(1, {}, {constant_tree(1), constant_tree(0), constant_tree(1)});
    EXPECT_EQ(two_one.predict(x), label_conclusion);
    RandomForest tie(1, {}, {constant_tree(1), constant_tree(0)});
    EXPECT_EQ(tie.predict(x), label_premise);
}

TEST(Forest, TreeOrderDoesNotMatter) {
    auto data = corpus::generate_clause_corpus(8, 200);
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(data, lex, tok, {}, {.n_trees = 9, .max_depth = 3, .seed = 4});
    auto trees = forest.trees();
    std::reverse(trees.begin(), trees.end());
    RandomForest reversed(forest.width(), forest.config(), trees);
    for (const auto& e : corpus::generate_clause_corpus(9, 200)) {
        auto x = featurize(make_clause(e.text, tok), 0, 1, lex);
        EXPECT_EQ(forest.votes(x), reversed.votes(x));
    }
}

TEST(Forest, UnlimitedDepthMemorizesDeduplicatedSet) {
    // random labels on distinct points, so no single feature is informative
    Rng rng(12);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> row{static_cast<double>(rng.below(4)), static_cast<double>(rng.below(4)),
                                static_cast<double>(rng.below(4)), static_cast<double>(rng.below(4))};
        if (std::find(x.begin(), x.end(), row) != x.end()) continue;
        x.push_back(row);
        y.push_back(static_cast<int>(rng.below(2)));
    }
    auto forest = train_forest(x, y, {.n_trees = 1, .max_depth = 0, .seed = 1, .bootstrap = false});
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(forest.predict(x[i]), y[i]);
}

TEST(Forest, StumpPicksBestGiniThreshold) {
    std::vector<std::vector<double>> x{{1}, {2}, {3}, {4}, {5}, {6}};
    std::vector<int> y{0, 0, 1, 0, 1, 1};
    auto forest = train_forest(x, y, {.n_trees = 1, .max_depth = 1, .seed = 1, .bootstrap = false});
    // brute force over all midpoints with weighted child impurity
    auto impurity = [](const std::vector<int>& labels) {
        if (labels.empty()) return 0.0;
        const double p = static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / static_cast<double>(labels.size());
        return 2 * p * (1 - p);
    };
    double best_threshold = 0, best = 1e9;
    for (double t = 1.5; t < 6; t += 1.0) {
        std::vector<int> l, r;
        for (std::size_t i = 0; i < x.size(); ++i) (x[i][0] <= t ? l : r).push_back(y[i]);
        const double w = (static_cast<double>(l.size()) * impurity(l) + static_cast<double>(r.size()) * impurity(r)) / 6.0;
        if (w < best - 1e-12) {
            best = w;
            best_threshold = t;
        }
    }
    const auto& root = forest.trees()[0].nodes()[0];
    EXPECT_EQ(root.feature, 0);
    EXPECT_DOUBLE_EQ(root.threshold, best_threshold);
}

TEST(Forest, StructureInvariants) {
    auto data = corpus::generate_clause_corpus(8, 200);
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(data, lex, tok, {}, {.n_trees = 5, .seed = 4});
    for (const auto& t : forest.trees()) {
        EXPECT_LE(t.depth(), 10u);
        for (const auto& n : t.nodes()) {
            if (n.is_leaf()) {
                EXPECT_GT(n.counts[0] + n.counts[1], 0u);
            } else {
                EXPECT_LT(static_cast<std::size_t>(n.feature), forest.width());
            }
        }
    }
}

TEST(Forest, DeterministicAndRoundTrips) {
    auto data = corpus::generate_clause_corpus(8, 200);
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    ForestConfig cfg{.n_trees = 7, .seed = 21};
    auto a = train_clause_classifier(data, lex, tok, {}, cfg);
    auto b = train_clause_classifier(data, lex, tok, {}, cfg);
    EXPECT_EQ(to_json(a), to_json(b));
    const auto path = std::filesystem::temp_directory_path() / "mlmn_forest.json";
    save_forest(path.string(), a);
    auto c = load_forest(path.string());
    EXPECT_EQ(to_json(c), to_json(a));
    std::filesystem::remove(path);
}

TEST(Forest, Errors) {
    EXPECT_THROW(train_forest({{1.0}, {2.0}}, {0, 0}, {}), InputError);
    RandomForest f(2, {}, {constant_tree(0)});
    EXPECT_THROW(f.predict(std::vector<double>{1.0}), ShapeError);
}

TEST(Knowledge, SinglePremiseClause) {
    Clause c;
    c.word_end = 3;
    c.label = ClauseLabel::premise;
    auto q = project_knowledge({{5, 6, 7}, 3}, {c});
    EXPECT_EQ(q, Tensor::matrix({{1, 0}, {1, 0}, {1, 0}}));
}

TEST(Knowledge, PremiseConclusionWithPadding) {
    Clause p, c;
    p.word_end = 2;
    p.label = ClauseLabel::premise;
    c.word_begin = 2;
    c.word_end = 4;
    c.label = ClauseLabel::conclusion;
    auto q = project_knowledge({{5, 6, 7, 8, 0, 0}, 4}, {p, c});
    EXPECT_EQ(q, Tensor::matrix({{1, 0}, {1, 0}, {0, 1}, {0, 1}, {1, 0}, {1, 0}}));
}

TEST(Knowledge, EmptyArticleIsAllPad) {
    auto q = project_knowledge({{0, 0, 0}, 0}, {});
    EXPECT_EQ(q, Tensor::matrix({{1, 0}, {1, 0}, {1, 0}}));
}

TEST(Knowledge, UncoveredTokenIsAnError) {
    Clause p;
    p.word_end = 2;
    p.label = ClauseLabel::premise;
    EXPECT_THROW(project_knowledge({{5, 6, 7}, 3}, {p}), InputError);
}

TEST(ArticleParser, Article232AlternatesPremiseConclusion) {
    corpus::WhitespaceCjkTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(zh_clauses(), lex, tok, {}, {.n_trees = 50, .seed = 3});
    auto parsed = parse_article({"232", "criminal law", article_232}, lex, forest, tok);
    ASSERT_EQ(parsed.clauses.size(), 4u);
    std::vector<ClauseLabel> labels;
    for (const auto& c : parsed.clauses) labels.push_back(c.label);
    EXPECT_EQ(labels, (std::vector<ClauseLabel>{ClauseLabel::premise, ClauseLabel::conclusion, ClauseLabel::premise,
                                                ClauseLabel::conclusion}));
    EXPECT_FALSE(parsed.definition_only());
}

TEST(ArticleParser, KnowledgeRowsAreOneHotAtConfiguredLength) {
    auto synth = corpus::generate_synthetic({.n_cases = 1, .n_articles = 6});
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(synth.clauses, lex, tok, {}, {.n_trees = 15, .seed = 1});
    auto vocab = corpus::build_vocab({{"the"}}, 1);
    for (const auto& a : synth.articles) {
        auto parsed = parse_article(a, lex, forest, tok);
        EXPECT_FALSE(parsed.definition_only()) << a.text;
        EXPECT_EQ(parsed.clauses.front().label, ClauseLabel::premise) << a.text;
        for (std::size_t len : {4u, 50u}) {
            auto q = knowledge_matrix(parsed, corpus::encode_and_pad(parsed.tokens, vocab, len));
            ASSERT_EQ(q.rows(), len);
            for (std::size_t i = 0; i < len; ++i) EXPECT_EQ(q.at(i, 0) + q.at(i, 1), 1.0);
        }
    }
}

TEST(ArticleParser, DefinitionOnlyArticleIsFlagged) {
    corpus::WhitespaceTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(corpus::generate_clause_corpus(4, 200), lex, tok, {}, {.n_trees = 15});
    auto parsed = parse_article({"d1", "", "where the actor is a minor , whoever acts in case of need ."}, lex, forest, tok);
    EXPECT_TRUE(parsed.definition_only());
}

TEST(ArticleParser, JsonRoundTripRebuildsSpans) {
    corpus::WhitespaceCjkTokenizer tok;
    auto lex = default_lexicon();
    auto forest = train_clause_classifier(zh_clauses(), lex, tok, {}, {.n_trees = 20, .seed = 3});
    corpus::StopWords stop{"的"};
    auto parsed = parse_article({"232", "", article_232}, lex, forest, tok, stop);
    auto again = parsed_article_from_json(to_json(parsed), tok, stop);
    EXPECT_EQ(again.tokens, parsed.tokens);
    ASSERT_EQ(again.clauses.size(), parsed.clauses.size());
    for (std::size_t i = 0; i < parsed.clauses.size(); ++i) {
        EXPECT_EQ(again.clauses[i].word_begin, parsed.clauses[i].word_begin);
        EXPECT_EQ(again.clauses[i].label, parsed.clauses[i].label);
    }
    EXPECT_EQ(std::count(parsed.tokens.begin(), parsed.tokens.end(), "的"), 0);
}

TEST(ArticleParser, LexiconForestWidthMismatch) {
    corpus::WhitespaceTokenizer tok;
    RandomForest f(3, {}, {constant_tree(0)});
    EXPECT_THROW(parse_article({"x", "", "a , b"}, default_lexicon(), f, tok), CompatibilityError);
}
