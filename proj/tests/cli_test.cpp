#include <gtest/gtest.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mlmn/cli/app.hpp"

namespace fs = std::filesystem;
using namespace mlmn;

namespace {

    struct Result {
        int code;
        std::string out;
        std::string err;
    };

    Result invoke(const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return {code, out.str(), err.str()};
    }

    std::string slurp(const fs::path& p) { return cli::read_file(p.string()); }

    // One tiny synthetic workspace shared by the suite: corpus, parsed
    // articles, dataset split and a briefly trained matcher.
    class CliWorkspace : public ::testing::Test {
    protected:
        static fs::path dir;

        static std::string path(const std::string& name) { return (dir / name).string(); }

        static void SetUpTestSuite() {
            dir = fs::temp_directory_path() / ("mlmn_cli_test_" + std::to_string(::getpid()));
            fs::remove_all(dir);
            fs::create_directories(dir);
            std::ofstream(path("desk.json")) << R"({
              "tokenizer": "whitespace", "embedding_range": 1.0, "paragraph_length": 48,
              "model": {"embedding_dim": 8, "num_layers": 2, "filters": [8, 8], "kernel_sizes": [2, 4],
                        "fact_length": 16, "article_length": 24, "g1_width": 8, "g2_hidden": 8, "dropout": 0.0},
              "train": {"learning_rate": 0.01, "max_epochs": 2, "batch_size": 16},
              "forest": {"n_trees": 5},
              "cbow": {"dim": 8, "epochs": 1},
              "synthetic": {"n_articles": 6, "clause_examples": 120},
              "decision": {"embedding_dim": 8, "hidden": 4, "corr_width": 4, "paragraph_length": 48,
                           "fact_length": 16, "article_length": 24},
              "decision_train": {"max_epochs": 1}
            })";
            auto must = [](const std::vector<std::string>& args) {
                const auto r = invoke(args);
                ASSERT_EQ(r.code, 0) << args.front() << ": " << r.err;
            };
            must({"gen-synthetic", "--config", path("desk.json"), "--cases", "60", "--out", path("syn")});
            must({"parse-articles", "--config", path("desk.json"), "--articles", path("syn/articles.jsonl"), "--lexicon",
                  path("syn/lexicon.txt"), "--train", path("syn/clauses.jsonl"), "--save-forest", path("forest.json"),
                  "--out", path("parsed.jsonl")});
            must({"build-dataset", "--config", path("desk.json"), "--cases", path("syn/cases.jsonl"), "--parsed",
                  path("parsed.jsonl"), "--out", path("data")});
            must({"train-matcher", "--config", path("desk.json"), "--dataset", path("data"), "--parsed",
                  path("parsed.jsonl"), "--out", path("run")});
        }

        static void TearDownTestSuite() { fs::remove_all(dir); }

        std::vector<std::string> data_args() const {
            return {"--config", path("desk.json"), "--dataset", path("data"), "--parsed", path("parsed.jsonl")};
        }

        static std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
            a.insert(a.end(), b.begin(), b.end());
            return a;
        }
    };

    fs::path CliWorkspace::dir;

    std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(CliWorkspace, GenSyntheticIsIdempotent) {
    for (const char* out : {"g1", "g2"}) {
        ASSERT_EQ(invoke({"gen-synthetic", "--seed", "7", "--cases", "20", "--out", path(out)}).code, 0);
    }
    for (const char* f : {"articles.jsonl", "cases.jsonl", "clauses.jsonl", "lexicon.txt"}) {
        EXPECT_EQ(slurp(dir / "g1" / f), slurp(dir / "g2" / f)) << f;
    }
    EXPECT_TRUE(fs::exists(dir / "g1" / "manifest.json"));
}

TEST_F(CliWorkspace, ParseArticlesWritesOneRecordPerArticleAndAReport) {
    EXPECT_EQ(line_count(slurp(path("parsed.jsonl"))), 6u);
    const auto report = nlohmann::json::parse(slurp(path("parsed.jsonl.report.json")));
    EXPECT_EQ(report["articles"], 6);
    EXPECT_GT(report["labels"]["conclusion"].get<int>(), 0);
    EXPECT_TRUE(fs::exists(path("forest.json")));
    EXPECT_TRUE(fs::exists(path("parsed.jsonl.manifest.json")));

    const auto again = invoke({"parse-articles", "--config", path("desk.json"), "--articles", path("syn/articles.jsonl"),
                            "--lexicon", path("syn/lexicon.txt"), "--forest", path("forest.json"), "--out",
                            path("parsed2.jsonl")});
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(slurp(path("parsed2.jsonl")), slurp(path("parsed.jsonl")));
}

TEST_F(CliWorkspace, MissingLexiconExitsWithInputError) {
    const auto r = invoke({"parse-articles", "--articles", path("syn/articles.jsonl"), "--lexicon", path("nope.txt"),
                        "--forest", path("forest.json"), "--out", path("x.jsonl")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("lexicon not found"), std::string::npos) << r.err;
}

TEST_F(CliWorkspace, SchemaViolationNamesTheLine) {
    std::ofstream(path("broken.jsonl")) << R"({"article_id": "a1", "text": "x"})" << "\n" << R"({"text": "y"})" << "\n";
    const auto r = invoke({"parse-articles", "--articles", path("broken.jsonl"), "--lexicon", path("syn/lexicon.txt"),
                        "--forest", path("forest.json"), "--out", path("x.jsonl")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("broken.jsonl:2"), std::string::npos) << r.err;
}

TEST_F(CliWorkspace, TrainMatcherWritesCheckpointLogsAndManifest) {
    for (const char* f : {"model.ckpt", "epochs.csv", "metrics.csv", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
    }
    const auto metrics = slurp(dir / "run" / "metrics.csv");
    EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "split,P,R,F1,TP,FP,FN");
    const auto m = cli::read_manifest(path("run/manifest.json"));
    EXPECT_EQ(m.command, "train-matcher");
    EXPECT_EQ(m.inputs.size(), 6u);  // config, parsed, vocab, three splits
    for (const auto& in : m.inputs) EXPECT_EQ(in.hash.size(), 40u);
}

TEST_F(CliWorkspace, CrimePresetSetsRatioAndFlagsWin) {
    auto cases = corpus::read_cases(path("syn/cases.jsonl"));
    for (auto& c : cases) c.crime = "traffic";
    fs::create_directories(dir / "traffic");
    corpus::write_jsonl(path("traffic/cases.jsonl"), cases);
    ASSERT_EQ(invoke({"build-dataset", "--config", path("desk.json"), "--cases", path("traffic/cases.jsonl"), "--parsed",
                   path("parsed.jsonl"), "--out", path("traffic/data")})
                  .code,
              0);
    const std::vector<std::string> base{"train-matcher", "--config", path("desk.json"), "--dataset", path("traffic/data"),
                                        "--parsed", path("parsed.jsonl"), "--epochs", "1", "--crime", "traffic"};
    ASSERT_EQ(invoke(cat(base, {"--out", path("traffic/r12")})).code, 0);
    EXPECT_EQ(cli::read_manifest(path("traffic/r12/manifest.json")).config["train"]["negative_ratio"], 12.0);
    ASSERT_EQ(invoke(cat(base, {"--neg-ratio", "3", "--out", path("traffic/r3")})).code, 0);
    EXPECT_EQ(cli::read_manifest(path("traffic/r3/manifest.json")).config["train"]["negative_ratio"], 3.0);

    EXPECT_EQ(invoke(cat({"train-matcher"}, cat(data_args(), {"--crime", "injuring", "--out", path("inj")}))).code, 2);
    EXPECT_EQ(invoke(cat({"train-matcher"}, cat(data_args(), {"--crime", "arson", "--out", path("inj")}))).code, 2);
}

TEST_F(CliWorkspace, CoarseTrainingUsesParagraphLength) {
    const auto r = invoke(cat({"train-matcher"}, cat(data_args(), {"--coarse", "--epochs", "1", "--out", path("coarse")})));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto loaded = model::load_checkpoint(path("coarse/model.ckpt"));
    EXPECT_EQ(loaded.model.config().fact_length, 48u);
    const auto e = invoke(cat({"eval", "--model", path("coarse/model.ckpt"), "--mode", "coarse-model", "--out",
                            path("coarse_eval.csv")},
                           data_args()));
    EXPECT_EQ(e.code, 0) << e.err;
}

TEST_F(CliWorkspace, NonFiniteLossExitsWithNumericError) {
    const auto r = invoke(cat({"train-matcher"}, cat(data_args(), {"--lr", "1e300", "--epochs", "3", "--out", path("boom")})));
    EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(CliWorkspace, EvalModes) {
    for (const char* mode : {"fine", "coarse-union"}) {
        const auto out = path(std::string("eval_") + mode + ".csv");
        const auto r = invoke(cat({"eval", "--model", path("run/model.ckpt"), "--mode", mode, "--out", out}, data_args()));
        ASSERT_EQ(r.code, 0) << r.err;
        std::ifstream is(out);
        const auto rows = training::read_metrics_csv(is);
        ASSERT_EQ(rows.size(), 1u);
        EXPECT_EQ(rows[0].split, "test");
    }
    // fine metrics from eval agree with the test row written at training time
    std::ifstream a(path("eval_fine.csv")), b(path("run/metrics.csv"));
    const auto eval_rows = training::read_metrics_csv(a);
    const auto train_rows = training::read_metrics_csv(b);
    EXPECT_EQ(eval_rows[0].metrics, train_rows.back().metrics);
    EXPECT_EQ(invoke(cat({"eval", "--model", path("run/model.ckpt"), "--mode", "nope", "--out", path("e.csv")}, data_args()))
                  .code,
              2);
}

TEST_F(CliWorkspace, ThresholdSweep) {
    const auto out = path("sweep.csv");
    const auto r = invoke(cat({"eval", "--model", path("run/model.ckpt"), "--sweep", "0.3,0.6,1", "--out", out}, data_args()));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream is(slurp(out));
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "threshold,P,R,F1,TP,FP,FN");
    std::stringstream rest;
    rest << training::metrics_csv_header << "\n" << is.rdbuf();
    const auto rows = training::read_metrics_csv(rest);
    ASSERT_EQ(rows.size(), 3u);
    ASSERT_EQ(invoke(cat({"eval", "--model", path("run/model.ckpt"), "--out", path("at_default.csv")}, data_args())).code, 0);
    std::ifstream fine(path("at_default.csv"));
    EXPECT_EQ(rows[1].metrics, training::read_metrics_csv(fine)[0].metrics);
    // p > 1 never holds
    EXPECT_EQ(rows[2].metrics.tp + rows[2].metrics.fp, 0u);
    EXPECT_EQ(invoke(cat({"eval", "--model", path("run/model.ckpt"), "--sweep", "0.5,2", "--out", out}, data_args())).code,
              2);
}

TEST_F(CliWorkspace, RecommendThresholdsAndMismatches) {
    const std::vector<std::string> base{"recommend", "--config", path("desk.json"), "--model", path("run/model.ckpt"),
                                        "--parsed", path("parsed.jsonl"), "--fact", "the defendant after at"};
    const auto all = invoke(cat(base, {"--threshold", "0.0", "--all"}));
    ASSERT_EQ(all.code, 0) << all.err;
    EXPECT_EQ(line_count(all.out), 6u);
    const auto none = invoke(cat(base, {"--threshold", "1.0"}));
    EXPECT_EQ(none.code, 0);
    EXPECT_EQ(none.out, "");

    // scores come out most probable first
    std::istringstream lines(all.out);
    double prev = 2.0;
    for (std::string id, p; lines >> id >> p;) {
        EXPECT_LE(std::stod(p), prev);
        prev = std::stod(p);
    }

    EXPECT_EQ(invoke({"recommend", "--model", path("run/model.ckpt"), "--parsed", path("parsed.jsonl"), "--fact", "x"}).code,
              4);  // trained with the whitespace tokenizer
    std::ofstream(path("other_vocab.tsv")) << "<pad>\t0\n<unk>\t0\nfoo\t1\n";
    EXPECT_EQ(invoke(cat(base, {"--vocab", path("other_vocab.tsv")})).code, 4);
    EXPECT_EQ(invoke(cat(base, {"--vocab", path("data/vocab.tsv")})).code, 0);
}

TEST_F(CliWorkspace, ReplayReproducesOutputsAndDetectsChangedInputs) {
    const auto before = slurp(path("run/metrics.csv"));
    const auto ckpt = slurp(path("run/model.ckpt"));
    ASSERT_EQ(invoke({"--replay", path("run/manifest.json")}).code, 0);
    EXPECT_EQ(slurp(path("run/metrics.csv")), before);
    EXPECT_EQ(slurp(path("run/model.ckpt")), ckpt);

    fs::copy(path("data"), path("data_copy"), fs::copy_options::recursive);
    const auto r = invoke(cat({"eval", "--model", path("run/model.ckpt"), "--out", path("copy_eval.csv"), "--config",
                            path("desk.json"), "--parsed", path("parsed.jsonl")},
                           {"--dataset", path("data_copy")}));
    ASSERT_EQ(r.code, 0) << r.err;
    std::ofstream(path("data_copy/test.jsonl"), std::ios::app) << "\n";
    EXPECT_EQ(invoke({"--replay", path("copy_eval.csv.manifest.json")}).code, 4);
}

TEST_F(CliWorkspace, DecisionCommands) {
    const auto fine = invoke(cat({"train-decision", "--path", "fine", "--out", path("dec")}, data_args()));
    ASSERT_EQ(fine.code, 0) << fine.err;
    const auto csv = slurp(path("dec/metrics.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), decision::decision_csv_header());
    EXPECT_NE(csv.find("\nfine-gold,"), std::string::npos);

    const auto pred = invoke(cat({"eval-decision", "--model", path("dec/decision.ckpt"), "--articles", "predicted",
                               "--matcher", path("run/model.ckpt"), "--out", path("dec_pred.csv")},
                              data_args()));
    ASSERT_EQ(pred.code, 0) << pred.err;
    EXPECT_NE(slurp(path("dec_pred.csv")).find("\nfine-predicted,"), std::string::npos);

    EXPECT_EQ(invoke(cat({"train-decision", "--articles", "predicted", "--out", path("d2")}, data_args())).code, 2);
    EXPECT_EQ(invoke(cat({"train-decision", "--path", "sideways", "--out", path("d2")}, data_args())).code, 2);
}

TEST_F(CliWorkspace, TrainEmbeddingsWritesOneVectorPerToken) {
    const auto r = invoke(cat({"train-embeddings", "--out", path("emb.txt")}, data_args()));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto vocab = corpus::Vocabulary::load(path("data/vocab.tsv"));
    const auto table = corpus::load_embeddings(path("emb.txt"), vocab, 8, 1);
    EXPECT_EQ(table.rows(), vocab.size());
    const auto m = invoke(cat({"train-matcher", "--embeddings", path("emb.txt"), "--epochs", "1", "--out", path("run_emb")},
                           data_args()));
    EXPECT_EQ(m.code, 0) << m.err;
}

TEST(CliConfig, UnknownKeysAndBadValuesAreInputErrors) {
    const auto dir = fs::temp_directory_path();
    const auto cfg = (dir / ("mlmn_bad_cfg_" + std::to_string(::getpid()) + ".json")).string();
    std::ofstream(cfg) << R"({"model": {"embeding_dim": 3}})";
    EXPECT_EQ(invoke({"gen-synthetic", "--config", cfg, "--out", (dir / "unused").string()}).code, 2);
    std::ofstream(cfg) << R"({"model": {"threshold": 0.0}})";
    EXPECT_EQ(invoke({"gen-synthetic", "--config", cfg, "--out", (dir / "unused").string()}).code, 2);
    std::ofstream(cfg) << "{ not json";
    EXPECT_EQ(invoke({"gen-synthetic", "--config", cfg, "--out", (dir / "unused").string()}).code, 2);
    fs::remove(cfg);
    EXPECT_EQ(invoke({"no-such-command"}).code, 2);
    EXPECT_EQ(invoke({"gen-synthetic"}).code, 2);  // --out is required
    EXPECT_EQ(invoke({"gen-synthetic", "--tokenizer", "morse", "--out", (dir / "unused").string()}).code, 2);
}

TEST(CliConfig, FlagsOverrideFileOverridesDefaults) {
    const auto file = nlohmann::json::parse(R"({"seed": 5, "train": {"learning_rate": 0.5, "max_epochs": 9}})");
    const auto flags = nlohmann::json::parse(R"({"train": {"learning_rate": 0.25}})");
    const auto c = cli::resolve_config(file, cli::crime_preset("injuring"), flags);
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.train.seed, 5u);
    EXPECT_EQ(c.forest.seed, 5u);
    EXPECT_EQ(c.train.learning_rate, 0.25);
    EXPECT_EQ(c.train.max_epochs, 9u);
    EXPECT_EQ(c.train.negative_ratio, 5.0);
    EXPECT_EQ(c.model, model::ModelConfig{});
}

TEST(Manifest, GitBlobHashMatchesGit) {
    // values from `git hash-object --stdin`
    EXPECT_EQ(cli::git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    EXPECT_EQ(cli::git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}
