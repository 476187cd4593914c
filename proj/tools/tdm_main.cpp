// tdm: temporal depression modelling pipeline over user post timelines.
//
// Subcommands: synth, preprocess, features, train, predict, evaluate, grid,
// stats. Every stage consumes/produces file artifacts so stages can be run
// and tested independently; all randomness flows from --seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tdm/analysis.hpp"
#include "tdm/corpus.hpp"
#include "tdm/error.hpp"
#include "tdm/pipeline.hpp"
#include "tdm/preprocess.hpp"
#include "tdm/rng.hpp"
#include "tdm/semantics.hpp"
#include "tdm/symptoms.hpp"
#include "tdm/tud.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tdm;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void echo_config(const std::string& subcommand, json config) {
    config["subcommand"] = subcommand;
    std::cout << config.dump() << "\n";
}

Detector make_detector(const std::string& spec) {
    if (spec == "lexicon") return lexicon_detector(default_lexicon());
    const std::string prefix = "lexicon:";
    if (spec.rfind(prefix, 0) == 0)
        return lexicon_detector(load_lexicon(spec.substr(prefix.size())));
    throw ValidationError("unknown detector '" + spec + "', expected lexicon[:<path>]");
}

// Stages accept either raw corpora or the preprocess stage's output; raw
// input is cleaned in memory (the pipeline is idempotent).
void ensure_preprocessed(Corpus& corpus) {
    for (const auto& user : corpus.users)
        if (!user.proper_posts.empty()) return;
    preprocess_corpus(corpus);
}

struct FeatureFlags {
    std::string features = "ds,ar,tp,es";
    std::string fusion = "concat";
    std::string mode = "nonclinical";
    bool mde = false;
    int slide = 14;
    std::string denominator = "active";

    void attach(CLI::App* cmd) {
        cmd->add_option("--features", features,
                        "comma list from {ds,ar,tp,es} selecting model features");
        cmd->add_option("--fusion", fusion, "concat | multiply (DS scaled into ES)")
            ->check(CLI::IsMember({"concat", "multiply"}));
        cmd->add_option("--mode", mode, "clinical | nonclinical scoring")
            ->check(CLI::IsMember({"clinical", "nonclinical"}));
        cmd->add_flag("--mde", mde, "minimal depression expression scoring");
        cmd->add_option("--slide", slide, "episode slide length in days")
            ->check(CLI::IsMember({1, 7, 14}));
        cmd->add_option("--denominator", denominator,
                        "day-fraction denominator: active | window")
            ->check(CLI::IsMember({"active", "window"}));
    }

    FeatureConfig to_config() const {
        FeatureConfig fc;
        fc.use_ds = features.find("ds") != std::string::npos;
        fc.use_ar = features.find("ar") != std::string::npos;
        fc.use_tp = features.find("tp") != std::string::npos;
        fc.use_es = features.find("es") != std::string::npos;
        fc.fusion = fusion == "multiply" ? Fusion::MultiplyDsIntoEs : Fusion::Concat;
        fc.mode.clinical =
            mode == "clinical" ? ClinicalSetting::Clinical : ClinicalSetting::NonClinical;
        fc.mode.sensitivity = mde ? Sensitivity::Mde : Sensitivity::Standard;
        fc.slide = slide;
        return fc;
    }

    DenominatorPolicy denom() const {
        return denominator == "window" ? DenominatorPolicy::WindowDays
                                       : DenominatorPolicy::ActiveDays;
    }
};

json feature_config_json(const FeatureConfig& fc) {
    return json{{"use_ds", fc.use_ds},   {"use_ar", fc.use_ar},
                {"use_tp", fc.use_tp},   {"use_es", fc.use_es},
                {"fusion", fc.fusion == Fusion::MultiplyDsIntoEs ? "multiply" : "concat"},
                {"mode", fc.mode.to_string()},
                {"slide", fc.slide}};
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal user-level depression modelling pipeline"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "generate a labelled synthetic corpus");
    SynthSpec synth_spec;
    double inject_dep = 0.25, inject_ctl = 0.0;
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out, "output corpus (JSONL)")->required();
    synth_cmd->add_option("--n-depressed", synth_spec.n_depressed, "depressed user count");
    synth_cmd->add_option("--n-control", synth_spec.n_control, "control user count");
    synth_cmd->add_option("--history-days", synth_spec.history_days, "timeline length in days");
    synth_cmd->add_option("--rate-dep", synth_spec.depressed.daily_post_rate_mean,
                          "mean posts/day, depressed class");
    synth_cmd->add_option("--rate-ctl", synth_spec.control.daily_post_rate_mean,
                          "mean posts/day, control class");
    synth_cmd->add_option("--silence-dep", synth_spec.depressed.silence_prob,
                          "probability a day has no posts, depressed class");
    synth_cmd->add_option("--silence-ctl", synth_spec.control.silence_prob,
                          "probability a day has no posts, control class");
    synth_cmd->add_option("--inject-dep", inject_dep,
                          "per-post per-symptom phrase probability, depressed class");
    synth_cmd->add_option("--inject-ctl", inject_ctl,
                          "per-post per-symptom phrase probability, control class");
    synth_cmd->add_option("--cycle-days", synth_spec.recurrence_cycle_days,
                          "recurrence period of injected depressive phases (0 = always on)");
    synth_cmd->add_option("--seed", synth_spec.seed, "generator seed");

    // ---- preprocess ----
    auto* prep_cmd = app.add_subcommand("preprocess", "clean post text into proper posts");
    std::string prep_in, prep_out, prep_report, prep_contractions, prep_emoji;
    prep_cmd->add_option("--in", prep_in, "input corpus")->required();
    prep_cmd->add_option("--out", prep_out, "output corpus with proper posts")->required();
    prep_cmd->add_option("--report", prep_report, "write removal report JSON here");
    prep_cmd->add_option("--contractions", prep_contractions, "contraction table JSON");
    prep_cmd->add_option("--emoji-ranges", prep_emoji, "emoji codepoint ranges JSON");

    // ---- features ----
    auto* feat_cmd = app.add_subcommand("features", "dump per-episode feature CSV");
    std::string feat_in, feat_out = "-", feat_detector = "lexicon";
    FeatureFlags feat_flags;
    int feat_workers = static_cast<int>(std::thread::hardware_concurrency());
    feat_cmd->add_option("--in", feat_in, "input corpus")->required();
    feat_cmd->add_option("--out", feat_out, "output CSV path ('-' = stdout)");
    feat_cmd->add_option("--detector", feat_detector, "symptom detector: lexicon[:<path>]");
    feat_flags.attach(feat_cmd);
    feat_cmd->add_option("--workers", feat_workers, "parallel workers for extraction");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a model on a whole corpus");
    std::string train_in, train_out, train_detector = "lexicon", train_model = "tud";
    FeatureFlags train_flags;
    TrainConfig train_cfg;
    int train_hidden = 100, train_attn = 0, train_enc_dim = 512;
    double train_dropout = 0.1;
    std::uint64_t train_seed = 0, train_enc_seed = 0;
    int train_workers = static_cast<int>(std::thread::hardware_concurrency());
    train_cmd->add_option("--in", train_in, "training corpus")->required();
    train_cmd->add_option("--out", train_out, "checkpoint path (sidecar at <out>.json)")
        ->required();
    train_cmd->add_option("--model", train_model, "tud | hts")
        ->check(CLI::IsMember({"tud", "hts"}));
    train_cmd->add_option("--detector", train_detector, "symptom detector: lexicon[:<path>]");
    train_flags.attach(train_cmd);
    train_cmd->add_option("--epochs", train_cfg.epochs, "training epochs");
    train_cmd->add_option("--batch", train_cfg.batch, "mini-batch size");
    train_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
    train_cmd->add_option("--hidden", train_hidden, "LSTM hidden dimension");
    train_cmd->add_option("--attn-dim", train_attn, "attention dimension (0 = hidden)");
    train_cmd->add_option("--dropout", train_dropout, "input dropout rate");
    train_cmd->add_option("--encoder-dim", train_enc_dim, "reference encoder dimension");
    train_cmd->add_option("--encoder-seed", train_enc_seed, "reference encoder seed");
    train_cmd->add_option("--seed", train_seed, "master seed");
    train_cmd->add_option("--workers", train_workers, "parallel workers for extraction");

    // ---- predict ----
    auto* pred_cmd = app.add_subcommand("predict", "score users with a trained model");
    std::string pred_model, pred_in, pred_out = "-";
    int pred_workers = static_cast<int>(std::thread::hardware_concurrency());
    pred_cmd->add_option("--model", pred_model, "checkpoint path")->required();
    pred_cmd->add_option("--in", pred_in, "corpus to score")->required();
    pred_cmd->add_option("--out", pred_out, "output CSV path ('-' = stdout)");
    pred_cmd->add_option("--workers", pred_workers, "parallel workers for extraction");

    // ---- evaluate ----
    auto* eval_cmd = app.add_subcommand("evaluate", "10-fold CV of one model variant");
    std::string eval_in, eval_test, eval_out, eval_detector = "lexicon";
    FeatureFlags eval_flags;
    TrainConfig eval_train;
    int eval_folds = 10, eval_hidden = 100, eval_attn = 0, eval_enc_dim = 512;
    double eval_dropout = 0.1;
    std::uint64_t eval_seed = 0, eval_enc_seed = 0;
    int eval_workers = static_cast<int>(std::thread::hardware_concurrency());
    eval_cmd->add_option("--in", eval_in, "training corpus")->required();
    eval_cmd->add_option("--test", eval_test, "external test corpus");
    eval_cmd->add_option("--out", eval_out, "write CvResult JSON here");
    eval_cmd->add_option("--detector", eval_detector, "symptom detector: lexicon[:<path>]");
    eval_flags.attach(eval_cmd);
    eval_cmd->add_option("--folds", eval_folds, "cross-validation folds");
    eval_cmd->add_option("--epochs", eval_train.epochs, "training epochs");
    eval_cmd->add_option("--batch", eval_train.batch, "mini-batch size");
    eval_cmd->add_option("--lr", eval_train.learning_rate, "learning rate");
    eval_cmd->add_option("--hidden", eval_hidden, "LSTM hidden dimension");
    eval_cmd->add_option("--attn-dim", eval_attn, "attention dimension (0 = hidden)");
    eval_cmd->add_option("--dropout", eval_dropout, "input dropout rate");
    eval_cmd->add_option("--encoder-dim", eval_enc_dim, "reference encoder dimension");
    eval_cmd->add_option("--encoder-seed", eval_enc_seed, "reference encoder seed");
    eval_cmd->add_option("--seed", eval_seed, "master seed");
    eval_cmd->add_option("--workers", eval_workers, "parallel workers for extraction");

    // ---- grid ----
    auto* grid_cmd = app.add_subcommand("grid", "full ablation/single-feature experiment grid");
    std::string grid_in, grid_test, grid_out_dir = ".", grid_detector = "lexicon";
    std::vector<int> grid_slides{1, 7, 14};
    std::vector<std::string> grid_settings{"clinical", "nonclinical"};
    GridConfig grid_cfg;
    int grid_enc_dim = 512;
    std::uint64_t grid_enc_seed = 0;
    int grid_workers = static_cast<int>(std::thread::hardware_concurrency());
    grid_cmd->add_option("--in", grid_in, "training corpus")->required();
    grid_cmd->add_option("--test", grid_test, "external test corpus");
    grid_cmd->add_option("--out", grid_out_dir, "output directory for report.json/report.csv");
    grid_cmd->add_option("--detector", grid_detector, "symptom detector: lexicon[:<path>]");
    grid_cmd->add_option("--slides", grid_slides, "slide lengths to sweep")
        ->check(CLI::IsMember({1, 7, 14}));
    grid_cmd->add_option("--settings", grid_settings, "clinical settings to sweep")
        ->check(CLI::IsMember({"clinical", "nonclinical"}));
    grid_cmd->add_option("--folds", grid_cfg.folds, "cross-validation folds");
    grid_cmd->add_option("--epochs", grid_cfg.train.epochs, "training epochs");
    grid_cmd->add_option("--batch", grid_cfg.train.batch, "mini-batch size");
    grid_cmd->add_option("--lr", grid_cfg.train.learning_rate, "learning rate");
    grid_cmd->add_option("--hidden", grid_cfg.hyper.hidden_dim, "LSTM hidden dimension");
    grid_cmd->add_option("--dropout", grid_cfg.hyper.dropout, "input dropout rate");
    grid_cmd->add_option("--encoder-dim", grid_enc_dim, "reference encoder dimension");
    grid_cmd->add_option("--encoder-seed", grid_enc_seed, "reference encoder seed");
    grid_cmd->add_option("--seed", grid_cfg.seed, "master seed");
    grid_cmd->add_option("--workers", grid_workers, "parallel workers for extraction");

    // ---- stats ----
    auto* stats_cmd = app.add_subcommand("stats", "dataset statistics and LCI analysis");
    std::vector<std::string> stats_in;
    std::string stats_out = "-", stats_lexicon;
    stats_cmd->add_option("--in", stats_in, "input corpora (repeat for several datasets)")
        ->required();
    stats_cmd->add_option("--out", stats_out, "output JSON path ('-' = stdout)");
    stats_cmd->add_option("--lexicon", stats_lexicon,
                          "category lexicon JSON for LCI deviation analysis");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            synth_spec.depressed.symptom_inject_prob.fill(inject_dep);
            synth_spec.control.symptom_inject_prob.fill(inject_ctl);
            echo_config("synth", json::parse(synth_spec_json(synth_spec)));
            const Corpus corpus = synthesize(synth_spec);
            save_corpus(corpus, synth_out);
            std::cout << "wrote " << corpus.users.size() << " users to " << synth_out << "\n";
        } else if (*prep_cmd) {
            echo_config("preprocess", json{{"in", prep_in}, {"out", prep_out}});
            Corpus corpus = load_corpus(prep_in);
            const PreprocessTables tables =
                (!prep_contractions.empty() && !prep_emoji.empty())
                    ? load_tables(prep_contractions, prep_emoji)
                    : default_tables();
            const PreprocessReport report = preprocess_corpus(corpus, tables);
            save_corpus(corpus, prep_out);
            if (!prep_report.empty()) write_text(prep_report, report.to_json() + "\n");
            std::cout << "kept " << report.kept_count << " of " << report.input_count
                      << " posts\n";
        } else if (*feat_cmd) {
            const FeatureConfig fc = feat_flags.to_config();
            echo_config("features", feature_config_json(fc));
            Corpus corpus = load_corpus(feat_in);
            ensure_preprocessed(corpus);
            const Detector detector = make_detector(feat_detector);
            // The CSV carries no embeddings; a minimal encoder keeps this fast.
            const Encoder encoder = reference_encoder(8, 0);
            const auto features = extract_features(corpus, detector, encoder, fc.mode, fc.slide,
                                                   feat_workers, feat_flags.denom());
            const std::string csv = features_csv(features, fc.mode, fc.slide);
            if (feat_out == "-")
                std::cout << csv;
            else
                write_text(feat_out, csv);
        } else if (*train_cmd) {
            const FeatureConfig fc = train_flags.to_config();
            json cfg = feature_config_json(fc);
            cfg["model"] = train_model;
            cfg["epochs"] = train_cfg.epochs;
            cfg["batch"] = train_cfg.batch;
            cfg["lr"] = train_cfg.learning_rate;
            cfg["hidden"] = train_hidden;
            cfg["encoder_dim"] = train_enc_dim;
            cfg["seed"] = train_seed;
            echo_config("train", cfg);

            Corpus corpus = load_corpus(train_in);
            ensure_preprocessed(corpus);
            const Detector detector = make_detector(train_detector);
            const Encoder encoder = reference_encoder(train_enc_dim, train_enc_seed);
            const PreparedCorpus prepared =
                prepare_corpus(corpus, detector, encoder, train_workers);
            train_cfg.seed = mix_seed(train_seed, 0x7121);

            json sidecar = cfg;
            sidecar["detector"] = train_detector;
            sidecar["encoder_seed"] = train_enc_seed;
            sidecar["denominator"] = train_flags.denominator;
            if (train_model == "hts") {
                HtsModel model(train_enc_dim, mix_seed(train_seed, 0x1175));
                std::vector<std::pair<Eigen::VectorXd, double>> data;
                for (const auto& u : prepared.users) {
                    Eigen::VectorXd x(train_enc_dim);
                    for (int k = 0; k < train_enc_dim; ++k)
                        x(k) = static_cast<double>(u.atea[static_cast<size_t>(k)]);
                    data.emplace_back(std::move(x), u.label == Label::Depressed ? 1.0 : 0.0);
                }
                const auto losses = model.fit(data, train_cfg);
                model.save(train_out);
                sidecar["final_loss"] = losses.empty() ? 0.0 : losses.back();
            } else {
                const auto features =
                    features_for(prepared, fc.mode, fc.slide, train_flags.denom());
                std::vector<LabeledSequence> data;
                for (const auto& u : features)
                    data.push_back({assemble_sequence(u, fc, prepared.dim),
                                    u.label == Label::Depressed ? 1.0 : 0.0});
                TudConfig model_cfg;
                model_cfg.input_dim = fc.episode_dim(prepared.dim);
                model_cfg.hidden_dim = train_hidden;
                model_cfg.attn_dim = train_attn;
                model_cfg.dropout = train_dropout;
                model_cfg.seed = mix_seed(train_seed, 0x1070);
                TudModel model(model_cfg);
                const auto losses = model.fit(data, train_cfg);
                model.save(train_out);
                sidecar["final_loss"] = losses.empty() ? 0.0 : losses.back();
            }
            write_text(train_out + ".json", sidecar.dump(2) + "\n");
            std::cout << "saved checkpoint to " << train_out << "\n";
        } else if (*pred_cmd) {
            std::ifstream sidecar_in(pred_model + ".json");
            if (!sidecar_in)
                throw ValidationError("missing model sidecar: " + pred_model + ".json");
            json sidecar;
            sidecar_in >> sidecar;
            echo_config("predict", json{{"model", pred_model}, {"in", pred_in}});

            Corpus corpus = load_corpus(pred_in);
            ensure_preprocessed(corpus);
            const Detector detector = make_detector(sidecar.value("detector", "lexicon"));
            const int enc_dim = sidecar.value("encoder_dim", 512);
            const Encoder encoder =
                reference_encoder(enc_dim, sidecar.value("encoder_seed", std::uint64_t{0}));
            const PreparedCorpus prepared =
                prepare_corpus(corpus, detector, encoder, pred_workers);

            std::string csv = "user_id,label,probability,predicted\n";
            char buf[64];
            if (sidecar.value("model", "tud") == "hts") {
                const HtsModel model = HtsModel::load(pred_model);
                for (const auto& u : prepared.users) {
                    Eigen::VectorXd x(enc_dim);
                    for (int k = 0; k < enc_dim; ++k)
                        x(k) = static_cast<double>(u.atea[static_cast<size_t>(k)]);
                    const double p = model.forward(x);
                    std::snprintf(buf, sizeof(buf), ",%.6f,%d\n", p, p > 0.5 ? 1 : 0);
                    csv += u.user_id;
                    csv += ',';
                    csv += label_name(u.label);
                    csv += buf;
                }
            } else {
                FeatureConfig fc;
                fc.use_ds = sidecar.value("use_ds", true);
                fc.use_ar = sidecar.value("use_ar", true);
                fc.use_tp = sidecar.value("use_tp", true);
                fc.use_es = sidecar.value("use_es", true);
                fc.fusion = sidecar.value("fusion", "concat") == "multiply"
                                ? Fusion::MultiplyDsIntoEs
                                : Fusion::Concat;
                fc.mode = ScoringMode::parse(sidecar.value("mode", "nonclinical-standard"));
                fc.slide = sidecar.value("slide", 14);
                const DenominatorPolicy denom =
                    sidecar.value("denominator", "active") == "window"
                        ? DenominatorPolicy::WindowDays
                        : DenominatorPolicy::ActiveDays;
                const TudModel model = TudModel::load(pred_model);
                const auto features = features_for(prepared, fc.mode, fc.slide, denom);
                for (const auto& u : features) {
                    const auto seq = assemble_sequence(u, fc, prepared.dim);
                    const double p = model.forward(seq).probability;
                    std::snprintf(buf, sizeof(buf), ",%.6f,%d\n", p, p > 0.5 ? 1 : 0);
                    csv += u.user_id;
                    csv += ',';
                    csv += label_name(u.label);
                    csv += buf;
                }
            }
            if (pred_out == "-")
                std::cout << csv;
            else
                write_text(pred_out, csv);
        } else if (*eval_cmd) {
            const FeatureConfig fc = eval_flags.to_config();
            json cfg = feature_config_json(fc);
            cfg["folds"] = eval_folds;
            cfg["seed"] = eval_seed;
            echo_config("evaluate", cfg);

            Corpus corpus = load_corpus(eval_in);
            ensure_preprocessed(corpus);
            const Detector detector = make_detector(eval_detector);
            const Encoder encoder = reference_encoder(eval_enc_dim, eval_enc_seed);
            const PreparedCorpus prepared =
                prepare_corpus(corpus, detector, encoder, eval_workers);
            const auto features = features_for(prepared, fc.mode, fc.slide, eval_flags.denom());

            PreparedCorpus ext_prepared;
            std::vector<UserFeatures> ext_features;
            if (!eval_test.empty()) {
                Corpus test = load_corpus(eval_test);
                ensure_preprocessed(test);
                ext_prepared = prepare_corpus(test, detector, encoder, eval_workers);
                ext_features = features_for(ext_prepared, fc.mode, fc.slide, eval_flags.denom());
            }

            ModelHyper hyper;
            hyper.hidden_dim = eval_hidden;
            hyper.attn_dim = eval_attn;
            hyper.dropout = eval_dropout;
            eval_train.seed = mix_seed(eval_seed, 0xE7A1);
            CvConfig cv;
            cv.folds = eval_folds;
            cv.seed = mix_seed(eval_seed, 0xE7A2);
            const CvResult result = cross_validate(features, ext_features, fc, prepared.dim,
                                                   hyper, eval_train, cv);
            const MetricSummary s = result.held_out_summary();
            json out{{"held_out",
                      {{"precision_mean", s.precision_mean},
                       {"precision_std", s.precision_std},
                       {"recall_mean", s.recall_mean},
                       {"recall_std", s.recall_std},
                       {"f1_mean", s.f1_mean},
                       {"f1_std", s.f1_std}}}};
            if (!result.external.empty()) {
                const MetricSummary e = result.external_summary();
                out["external"] = {{"precision_mean", e.precision_mean},
                                   {"precision_std", e.precision_std},
                                   {"recall_mean", e.recall_mean},
                                   {"recall_std", e.recall_std},
                                   {"f1_mean", e.f1_mean},
                                   {"f1_std", e.f1_std}};
            }
            std::printf("held-out P %.4f R %.4f F1 %.4f\n", s.precision_mean, s.recall_mean,
                        s.f1_mean);
            if (!eval_out.empty()) write_text(eval_out, out.dump(2) + "\n");
        } else if (*grid_cmd) {
            grid_cfg.slides = grid_slides;
            grid_cfg.settings.clear();
            for (const auto& s : grid_settings)
                grid_cfg.settings.push_back(s == "clinical" ? ClinicalSetting::Clinical
                                                            : ClinicalSetting::NonClinical);
            json cfg{{"in", grid_in},
                     {"slides", grid_slides},
                     {"settings", grid_settings},
                     {"folds", grid_cfg.folds},
                     {"epochs", grid_cfg.train.epochs},
                     {"hidden", grid_cfg.hyper.hidden_dim},
                     {"encoder_dim", grid_enc_dim},
                     {"seed", grid_cfg.seed}};
            echo_config("grid", cfg);

            Corpus corpus = load_corpus(grid_in);
            ensure_preprocessed(corpus);
            const Detector detector = make_detector(grid_detector);
            const Encoder encoder = reference_encoder(grid_enc_dim, grid_enc_seed);
            const PreparedCorpus prepared =
                prepare_corpus(corpus, detector, encoder, grid_workers);
            PreparedCorpus ext_prepared;
            bool has_external = false;
            if (!grid_test.empty()) {
                Corpus test = load_corpus(grid_test);
                ensure_preprocessed(test);
                ext_prepared = prepare_corpus(test, detector, encoder, grid_workers);
                has_external = true;
            }
            const GridReport report = run_experiment_grid(
                prepared, has_external ? &ext_prepared : nullptr, grid_cfg);
            fs::create_directories(grid_out_dir);
            write_text((fs::path(grid_out_dir) / "report.json").string(), report.to_json() + "\n");
            write_text((fs::path(grid_out_dir) / "report.csv").string(), report.to_csv());
            std::cout << "wrote report.json and report.csv to " << grid_out_dir << "\n";
        } else if (*stats_cmd) {
            echo_config("stats", json{{"in", stats_in}, {"lexicon", stats_lexicon}});
            json out;
            // Per-category deviations per corpus for the cross-dataset summary.
            std::map<std::string, std::vector<double>> category_devs;
            for (const auto& path : stats_in) {
                Corpus corpus = load_corpus(path);
                ensure_preprocessed(corpus);
                json dataset{{"path", path}};
                std::map<std::string, std::vector<double>> per_class[2];
                long n_users[2] = {0, 0};
                for (const auto& user : corpus.users) {
                    const UserStats s = user_stats(user);
                    const int cls = user.label == Label::Depressed ? 0 : 1;
                    ++n_users[cls];
                    auto& dest = per_class[cls];
                    dest["n_tweets"].push_back(static_cast<double>(s.n_tweets));
                    dest["n_proper_tweets"].push_back(static_cast<double>(s.n_proper_tweets));
                    dest["n_days"].push_back(static_cast<double>(s.n_days));
                    dest["afp"].push_back(s.afp);
                    dest["fpf"].push_back(s.fpf);
                    dest["avg_tweet_len"].push_back(s.avg_tweet_len);
                    dest["avg_sents"].push_back(s.avg_sents);
                }
                dataset["n_depressed"] = n_users[0];
                dataset["n_control"] = n_users[1];
                json stat_rows;
                for (const auto& [name, dep_vals] : per_class[0]) {
                    const auto& ctl_vals = per_class[1][name];
                    json row{{"depressed_mean", mean(dep_vals)},
                             {"depressed_std", sample_std(dep_vals)},
                             {"control_mean", mean(ctl_vals)},
                             {"control_std", sample_std(ctl_vals)}};
                    if (dep_vals.size() >= 2 && ctl_vals.size() >= 2) {
                        const TTestResult t = welch_t(dep_vals, ctl_vals);
                        row["welch_t"] = t.t;
                        row["welch_p"] = t.p;
                        row["significant"] = t.p < 0.05;
                    }
                    stat_rows[name] = std::move(row);
                }
                dataset["user_stats"] = std::move(stat_rows);

                if (!stats_lexicon.empty()) {
                    const CategoryLexicon lexicon = load_category_lexicon(stats_lexicon);
                    const std::string dep_digest = build_digest(corpus, Label::Depressed);
                    const std::string ctl_digest = build_digest(corpus, Label::Control);
                    const auto entries = lci_analysis(dep_digest, ctl_digest, lexicon);
                    json lci_rows;
                    for (const auto& e : entries) {
                        lci_rows[e.category] = json{{"lci_depressed", e.lci_d},
                                                    {"lci_control", e.lci_c},
                                                    {"deviation", e.dev}};
                        category_devs[e.category].push_back(e.dev);
                    }
                    dataset["lci"] = std::move(lci_rows);
                }
                out["datasets"].push_back(std::move(dataset));
            }
            if (!category_devs.empty() && stats_in.size() > 1) {
                json summary;
                for (const auto& [category, devs] : category_devs) {
                    const DevSummary s = deviation_summary(devs);
                    summary[category] = json{{"dev_avg", s.avg}, {"dev_std", s.stddev}};
                }
                out["lci_deviation_summary"] = std::move(summary);
            }
            const std::string text = out.dump(2) + "\n";
            if (stats_out == "-")
                std::cout << text;
            else
                write_text(stats_out, text);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalFault& e) {
        std::cerr << "numerical fault: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
