#include "tdm/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tdm/error.hpp"
#include "tdm/rng.hpp"

namespace tdm {

using nlohmann::json;

long count_tokens(std::string_view text) {
    long n = 0;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) ++n;
        i = j;
    }
    return n;
}

long count_sentences(std::string_view text) {
    long n = 0;
    bool content = false;
    for (char c : text) {
        if (c == '.' || c == '?' || c == '!') {
            if (content) ++n;
            content = false;
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            content = true;
        }
    }
    if (content) ++n;
    return n;
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

UserStats user_stats(const UserTimeline& timeline) {
    if (timeline.posts.empty()) throw ValidationError("user_stats needs >= 1 post");
    UserStats s;
    s.n_tweets = static_cast<long>(timeline.posts.size());
    s.n_proper_tweets = static_cast<long>(timeline.proper_posts.size());
    s.n_days = timeline.span_days();

    std::vector<double> gaps;
    gaps.reserve(timeline.posts.size());
    for (size_t i = 1; i < timeline.posts.size(); ++i)
        gaps.push_back(static_cast<double>(timeline.posts[i].ts - timeline.posts[i - 1].ts) /
                       86400.0);
    s.afp = mean(gaps);
    s.fpf = sample_std(gaps);

    double token_sum = 0.0;
    double sent_sum = 0.0;
    for (const auto& p : timeline.posts) {
        token_sum += static_cast<double>(count_tokens(p.text));
        sent_sum += static_cast<double>(count_sentences(p.text));
    }
    s.avg_tweet_len = token_sum / static_cast<double>(timeline.posts.size());
    s.avg_sents = sent_sum / static_cast<double>(timeline.posts.size());
    return s;
}

// ---- incomplete beta / t distribution ----------------------------------------

namespace {

// Continued fraction for I_x(a,b) by the modified Lentz method.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 400;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0)
        throw ValidationError("incomplete beta parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double dof) {
    if (dof <= 0.0) throw ValidationError("t-test degrees of freedom must be positive");
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

TTestResult welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw ValidationError("welch_t needs >= 2 values per sample");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean(a);
    const double mb = mean(b);
    const double sa = sample_std(a);
    const double sb = sample_std(b);
    const double va = sa * sa / na;
    const double vb = sb * sb / nb;
    TTestResult r;
    if (va + vb == 0.0) {
        // Degenerate samples: identical constants give p = 1, separated
        // constants are infinitely significant.
        r.dof = na + nb - 2.0;
        if (ma == mb) return r;
        r.t = ma > mb ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
        r.p = 0.0;
        return r;
    }
    r.t = (ma - mb) / std::sqrt(va + vb);
    r.dof = (va + vb) * (va + vb) /
            (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p = student_t_two_tailed_p(r.t, r.dof);
    return r;
}

TTestResult paired_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("paired_t needs equal-length samples");
    if (a.size() < 2) throw ValidationError("paired_t needs >= 2 pairs");
    std::vector<double> diff(a.size());
    for (size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    const double n = static_cast<double>(diff.size());
    const double md = mean(diff);
    const double sd = sample_std(diff);
    TTestResult r;
    r.dof = n - 1.0;
    if (sd == 0.0) {
        if (md == 0.0) return r;  // identical folds: t = 0, p = 1
        r.t = md > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
        r.p = 0.0;
        return r;
    }
    r.t = md / (sd / std::sqrt(n));
    r.p = student_t_two_tailed_p(r.t, r.dof);
    return r;
}

// ---- LCI ----------------------------------------------------------------------

CategoryLexicon load_category_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open category lexicon: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad category lexicon: ") + e.what());
    }
    CategoryLexicon lex;
    for (const auto& [key, value] : j.items()) {
        std::vector<std::string> words;
        for (const auto& w : value) words.push_back(w.get<std::string>());
        lex.emplace_back(key, std::move(words));
    }
    return lex;
}

std::string build_digest(const Corpus& corpus, Label label) {
    std::string digest;
    for (const auto& user : corpus.users) {
        if (user.label != label) continue;
        for (const auto& post : user.proper_posts) {
            if (!digest.empty()) digest.push_back(' ');
            digest += post.text;
        }
    }
    return digest;
}

namespace {

std::string strip_edge_punct(std::string_view tok) {
    size_t b = 0;
    size_t e = tok.size();
    auto is_punct = [](char c) { return c == '.' || c == ',' || c == '?' || c == '!'; };
    while (b < e && is_punct(tok[b])) ++b;
    while (e > b && is_punct(tok[e - 1])) --e;
    return std::string(tok.substr(b, e - b));
}

std::vector<double> category_percentages(const std::string& digest,
                                         const CategoryLexicon& lexicon) {
    std::vector<std::unordered_set<std::string>> sets;
    sets.reserve(lexicon.size());
    for (const auto& [_, words] : lexicon)
        sets.emplace_back(words.begin(), words.end());

    std::vector<long> hits(lexicon.size(), 0);
    long total = 0;
    size_t i = 0;
    while (i < digest.size()) {
        while (i < digest.size() && digest[i] == ' ') ++i;
        size_t j = i;
        while (j < digest.size() && digest[j] != ' ') ++j;
        if (j > i) {
            ++total;
            const std::string word = strip_edge_punct(std::string_view(digest).substr(i, j - i));
            for (size_t k = 0; k < sets.size(); ++k)
                if (sets[k].count(word)) ++hits[k];
        }
        i = j;
    }
    if (total == 0) throw ValidationError("lci_analysis: empty digest");
    std::vector<double> out(lexicon.size());
    for (size_t k = 0; k < lexicon.size(); ++k)
        out[k] = 100.0 * static_cast<double>(hits[k]) / static_cast<double>(total);
    return out;
}

}  // namespace

std::vector<LciEntry> lci_analysis(const std::string& depressed_digest,
                                   const std::string& control_digest,
                                   const CategoryLexicon& lexicon) {
    const std::vector<double> d = category_percentages(depressed_digest, lexicon);
    const std::vector<double> c = category_percentages(control_digest, lexicon);
    std::vector<LciEntry> out;
    out.reserve(lexicon.size());
    for (size_t k = 0; k < lexicon.size(); ++k)
        out.push_back(LciEntry{lexicon[k].first, d[k], c[k], d[k] - c[k]});
    return out;
}

DevSummary deviation_summary(std::span<const double> deviations) {
    return DevSummary{mean(deviations), sample_std(deviations)};
}

// ---- cross validation ----------------------------------------------------------

FoldMetrics classification_metrics(std::span<const int> predicted, std::span<const int> actual) {
    if (predicted.size() != actual.size())
        throw ValidationError("metric inputs must be equal length");
    FoldMetrics m;
    for (size_t i = 0; i < predicted.size(); ++i) {
        if (actual[i] == 1)
            (predicted[i] == 1 ? m.tp : m.fn)++;
        else
            (predicted[i] == 1 ? m.fp : m.tn)++;
    }
    m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

namespace {

MetricSummary summarize(const std::vector<FoldMetrics>& folds) {
    std::vector<double> p, r, f;
    for (const auto& m : folds) {
        p.push_back(m.precision);
        r.push_back(m.recall);
        f.push_back(m.f1);
    }
    MetricSummary s;
    s.precision_mean = mean(p);
    s.precision_std = sample_std(p);
    s.recall_mean = mean(r);
    s.recall_std = sample_std(r);
    s.f1_mean = mean(f);
    s.f1_std = sample_std(f);
    return s;
}

// Deterministic stratified fold assignment keyed by user index.
std::vector<int> fold_assignment(std::span<const Label> labels, int folds, std::uint64_t seed) {
    std::vector<size_t> dep, ctl;
    for (size_t i = 0; i < labels.size(); ++i)
        (labels[i] == Label::Depressed ? dep : ctl).push_back(i);
    if (static_cast<int>(dep.size()) < folds || static_cast<int>(ctl.size()) < folds)
        throw ValidationError("cross_validate: each class needs at least `folds` users");
    std::vector<int> assignment(labels.size(), 0);
    int salt = 0;
    for (auto* group : {&dep, &ctl}) {
        Rng rng(mix_seed(seed, 0xF01D + static_cast<std::uint64_t>(salt++)));
        rng.shuffle(group->begin(), group->end());
        for (size_t k = 0; k < group->size(); ++k)
            assignment[(*group)[k]] = static_cast<int>(k % static_cast<size_t>(folds));
    }
    return assignment;
}

}  // namespace

MetricSummary CvResult::held_out_summary() const { return summarize(held_out); }
MetricSummary CvResult::external_summary() const { return summarize(external); }

std::vector<double> CvResult::held_out_f1() const {
    std::vector<double> f;
    for (const auto& m : held_out) f.push_back(m.f1);
    return f;
}

std::vector<double> CvResult::external_f1() const {
    std::vector<double> f;
    for (const auto& m : external) f.push_back(m.f1);
    return f;
}

CvResult cross_validate(std::span<const UserFeatures> population,
                        std::span<const UserFeatures> external, const FeatureConfig& fc,
                        int embedding_dim, const ModelHyper& hyper, const TrainConfig& train,
                        const CvConfig& cv) {
    fc.validate();
    if (cv.folds < 2) throw ValidationError("cross_validate: folds must be >= 2");

    std::vector<Label> labels;
    labels.reserve(population.size());
    for (const auto& u : population) labels.push_back(u.label);
    const std::vector<int> fold_of = fold_assignment(labels, cv.folds, cv.seed);

    std::vector<LabeledSequence> sequences(population.size());
    for (size_t i = 0; i < population.size(); ++i) {
        sequences[i].inputs = assemble_sequence(population[i], fc, embedding_dim);
        sequences[i].label = population[i].label == Label::Depressed ? 1.0 : 0.0;
    }
    std::vector<LabeledSequence> external_sequences(external.size());
    for (size_t i = 0; i < external.size(); ++i) {
        external_sequences[i].inputs = assemble_sequence(external[i], fc, embedding_dim);
        external_sequences[i].label = external[i].label == Label::Depressed ? 1.0 : 0.0;
    }

    CvResult result;
    for (int fold = 0; fold < cv.folds; ++fold) {
        std::vector<LabeledSequence> train_set;
        std::vector<size_t> held_idx;
        for (size_t i = 0; i < sequences.size(); ++i) {
            if (fold_of[i] == fold)
                held_idx.push_back(i);
            else
                train_set.push_back(sequences[i]);
        }
        TudConfig model_cfg;
        model_cfg.input_dim = fc.episode_dim(embedding_dim);
        model_cfg.hidden_dim = hyper.hidden_dim;
        model_cfg.attn_dim = hyper.attn_dim;
        model_cfg.dropout = hyper.dropout;
        model_cfg.seed = mix_seed(cv.seed, 0xA100 + static_cast<std::uint64_t>(fold));
        TudModel model(model_cfg);
        TrainConfig fold_train = train;
        fold_train.seed = mix_seed(train.seed, 0xB200 + static_cast<std::uint64_t>(fold));
        model.fit(train_set, fold_train);

        std::vector<int> pred, actual;
        for (const size_t i : held_idx) {
            pred.push_back(model.predict(sequences[i].inputs));
            actual.push_back(static_cast<int>(sequences[i].label));
        }
        result.held_out.push_back(classification_metrics(pred, actual));

        if (!external_sequences.empty()) {
            std::vector<int> epred, eactual;
            for (const auto& s : external_sequences) {
                epred.push_back(model.predict(s.inputs));
                eactual.push_back(static_cast<int>(s.label));
            }
            result.external.push_back(classification_metrics(epred, eactual));
        }
    }
    return result;
}

CvResult cross_validate_hts(std::span<const PreparedUser> population,
                            std::span<const PreparedUser> external, int embedding_dim,
                            const TrainConfig& train, const CvConfig& cv) {
    if (cv.folds < 2) throw ValidationError("cross_validate: folds must be >= 2");
    std::vector<Label> labels;
    for (const auto& u : population) labels.push_back(u.label);
    const std::vector<int> fold_of = fold_assignment(labels, cv.folds, cv.seed);

    auto to_vec = [embedding_dim](const Embedding& e) {
        Eigen::VectorXd v(embedding_dim);
        for (int k = 0; k < embedding_dim; ++k) v(k) = static_cast<double>(e[static_cast<size_t>(k)]);
        return v;
    };
    std::vector<std::pair<Eigen::VectorXd, double>> items(population.size());
    for (size_t i = 0; i < population.size(); ++i)
        items[i] = {to_vec(population[i].atea),
                    population[i].label == Label::Depressed ? 1.0 : 0.0};
    std::vector<std::pair<Eigen::VectorXd, double>> ext_items(external.size());
    for (size_t i = 0; i < external.size(); ++i)
        ext_items[i] = {to_vec(external[i].atea),
                        external[i].label == Label::Depressed ? 1.0 : 0.0};

    CvResult result;
    for (int fold = 0; fold < cv.folds; ++fold) {
        std::vector<std::pair<Eigen::VectorXd, double>> train_set;
        std::vector<size_t> held_idx;
        for (size_t i = 0; i < items.size(); ++i) {
            if (fold_of[i] == fold)
                held_idx.push_back(i);
            else
                train_set.push_back(items[i]);
        }
        HtsModel model(embedding_dim, mix_seed(cv.seed, 0xC300 + static_cast<std::uint64_t>(fold)));
        TrainConfig fold_train = train;
        fold_train.seed = mix_seed(train.seed, 0xD400 + static_cast<std::uint64_t>(fold));
        model.fit(train_set, fold_train);

        std::vector<int> pred, actual;
        for (const size_t i : held_idx) {
            pred.push_back(model.predict(items[i].first));
            actual.push_back(static_cast<int>(items[i].second));
        }
        result.held_out.push_back(classification_metrics(pred, actual));
        if (!ext_items.empty()) {
            std::vector<int> epred, eactual;
            for (const auto& [x, y] : ext_items) {
                epred.push_back(model.predict(x));
                eactual.push_back(static_cast<int>(y));
            }
            result.external.push_back(classification_metrics(epred, eactual));
        }
    }
    return result;
}

// ---- experiment grid -------------------------------------------------------------

std::vector<VariantSpec> standard_variants() {
    std::vector<VariantSpec> v;
    auto add = [&](VariantSpec s) { v.push_back(std::move(s)); };
    const std::string ablation = "feature ablation tests";
    const std::string single = "single features";
    const std::string baseline = "baselines";
    add({"all-feats", ablation, false, false, Fusion::Concat, true, true, true, true});
    add({"all-feats(MDE)", ablation, false, true, Fusion::MultiplyDsIntoEs, true, false, false,
         true});
    add({"- DS", ablation, false, false, Fusion::Concat, false, true, true, true});
    {
        VariantSpec s{"- IS", ablation, false, false, Fusion::Concat, true, true, true, true};
        s.ablate_is = true;
        add(s);
    }
    {
        VariantSpec s{"- DRFS", ablation, false, false, Fusion::Concat, true, true, true, true};
        s.ablate_drfs = true;
        add(s);
    }
    add({"- TP", ablation, false, false, Fusion::Concat, true, true, false, true});
    add({"- AR", ablation, false, false, Fusion::Concat, true, false, true, true});
    add({"- ES", ablation, false, false, Fusion::Concat, true, true, true, false});
    add({"DS", single, false, false, Fusion::Concat, true, false, false, false});
    add({"DS(MDE)", single, false, true, Fusion::Concat, true, false, false, false});
    add({"TP", single, false, false, Fusion::Concat, false, false, true, false});
    add({"TP(MDE)", single, false, true, Fusion::Concat, false, false, true, false});
    add({"AR", single, false, false, Fusion::Concat, false, true, false, false});
    add({"ES", baseline, false, false, Fusion::Concat, false, false, false, true});
    return v;
}

VariantSpec hts_variant() {
    VariantSpec s;
    s.name = "HTS";
    s.category = "baselines";
    s.hts = true;
    return s;
}

namespace {

FeatureConfig feature_config_for(const VariantSpec& spec, ClinicalSetting setting, int slide) {
    FeatureConfig fc;
    fc.use_ds = spec.use_ds;
    fc.use_ar = spec.use_ar;
    fc.use_tp = spec.use_tp;
    fc.use_es = spec.use_es;
    fc.ablate_is = spec.ablate_is;
    fc.ablate_drfs = spec.ablate_drfs;
    fc.fusion = spec.fusion;
    fc.mode.clinical = setting;
    fc.mode.sensitivity = spec.mde ? Sensitivity::Mde : Sensitivity::Standard;
    fc.slide = slide;
    return fc;
}

json summary_json(const MetricSummary& s) {
    return json{{"precision_mean", s.precision_mean}, {"precision_std", s.precision_std},
                {"recall_mean", s.recall_mean},       {"recall_std", s.recall_std},
                {"f1_mean", s.f1_mean},               {"f1_std", s.f1_std}};
}

json folds_json(const std::vector<FoldMetrics>& folds) {
    json arr = json::array();
    for (const auto& m : folds)
        arr.push_back(json{{"tp", m.tp},
                           {"fp", m.fp},
                           {"fn", m.fn},
                           {"tn", m.tn},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1}});
    return arr;
}

json variant_json(const VariantResult& r) {
    json j{{"name", r.spec.name},
           {"category", r.spec.category},
           {"held_out",
            json{{"folds", folds_json(r.cv.held_out)},
                 {"summary", summary_json(r.cv.held_out_summary())}}}};
    if (!r.cv.external.empty())
        j["external"] = json{{"folds", folds_json(r.cv.external)},
                             {"summary", summary_json(r.cv.external_summary())}};
    if (r.p_held_out) {
        j["p_vs_all_feats_held_out"] = *r.p_held_out;
        j["significantly_worse_held_out"] = r.worse_held_out;
    }
    if (r.p_external) {
        j["p_vs_all_feats_external"] = *r.p_external;
        j["significantly_worse_external"] = r.worse_external;
    }
    return j;
}

const char* setting_name(ClinicalSetting s) {
    return s == ClinicalSetting::Clinical ? "clinical" : "nonclinical";
}

void csv_row(std::string& out, const std::string& slide, const std::string& setting,
             const std::string& split, const VariantResult& r, const MetricSummary& s,
             const std::optional<double>& p, bool worse) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,", s.precision_mean,
                  s.precision_std, s.recall_mean, s.recall_std, s.f1_mean, s.f1_std);
    out += slide;
    out += ',';
    out += setting;
    out += ',';
    out += split;
    out += ',';
    out += r.spec.category;
    out += ',';
    out += '"';
    out += r.spec.name;
    out += '"';
    out += buf;
    if (p) {
        std::snprintf(buf, sizeof(buf), "%.6f,%s", *p, worse ? "yes" : "no");
        out += buf;
    } else {
        out += ",";
    }
    out += '\n';
}

}  // namespace

std::string GridReport::to_json() const {
    json cells_json = json::array();
    for (const auto& cell : cells) {
        json variants = json::array();
        for (const auto& v : cell.variants) variants.push_back(variant_json(v));
        cells_json.push_back(json{{"slide", cell.slide},
                                  {"setting", setting_name(cell.setting)},
                                  {"variants", std::move(variants)}});
    }
    json j{{"cells", std::move(cells_json)}};
    if (hts) j["hts"] = variant_json(*hts);

    // Best held-out / external F1 over everything, paper-table style.
    const VariantResult* best_held = nullptr;
    const CellResult* best_held_cell = nullptr;
    const VariantResult* best_ext = nullptr;
    const CellResult* best_ext_cell = nullptr;
    for (const auto& cell : cells) {
        for (const auto& v : cell.variants) {
            if (!best_held ||
                v.cv.held_out_summary().f1_mean > best_held->cv.held_out_summary().f1_mean) {
                best_held = &v;
                best_held_cell = &cell;
            }
            if (!v.cv.external.empty() &&
                (!best_ext ||
                 v.cv.external_summary().f1_mean > best_ext->cv.external_summary().f1_mean)) {
                best_ext = &v;
                best_ext_cell = &cell;
            }
        }
    }
    if (best_held)
        j["best_held_out"] = json{{"slide", best_held_cell->slide},
                                  {"setting", setting_name(best_held_cell->setting)},
                                  {"name", best_held->spec.name},
                                  {"f1_mean", best_held->cv.held_out_summary().f1_mean}};
    if (best_ext)
        j["best_external"] = json{{"slide", best_ext_cell->slide},
                                  {"setting", setting_name(best_ext_cell->setting)},
                                  {"name", best_ext->spec.name},
                                  {"f1_mean", best_ext->cv.external_summary().f1_mean}};
    return j.dump(2);
}

std::string GridReport::to_csv() const {
    std::string out =
        "slide,setting,split,category,experiment,precision_mean,precision_std,recall_mean,"
        "recall_std,f1_mean,f1_std,p_vs_all_feats,significantly_worse\n";
    for (const auto& cell : cells) {
        const std::string slide = std::to_string(cell.slide);
        const std::string setting = setting_name(cell.setting);
        for (const auto& v : cell.variants) {
            csv_row(out, slide, setting, "held_out", v, v.cv.held_out_summary(), v.p_held_out,
                    v.worse_held_out);
            if (!v.cv.external.empty())
                csv_row(out, slide, setting, "external", v, v.cv.external_summary(),
                        v.p_external, v.worse_external);
        }
    }
    if (hts) {
        csv_row(out, "-", "-", "held_out", *hts, hts->cv.held_out_summary(), std::nullopt,
                false);
        if (!hts->cv.external.empty())
            csv_row(out, "-", "-", "external", *hts, hts->cv.external_summary(), std::nullopt,
                    false);
    }
    return out;
}

GridReport run_experiment_grid(const PreparedCorpus& population, const PreparedCorpus* external,
                               const GridConfig& config) {
    GridReport report;
    const std::vector<VariantSpec> variants = standard_variants();
    std::uint64_t cell_index = 0;
    for (const int slide : config.slides) {
        for (const ClinicalSetting setting : config.settings) {
            const std::uint64_t cell_seed = mix_seed(config.seed, 0xCE11 + cell_index++);
            CellResult cell;
            cell.slide = slide;
            cell.setting = setting;

            // Features per sensitivity, shared by every variant in the cell.
            const ScoringMode std_mode{setting, Sensitivity::Standard};
            const ScoringMode mde_mode{setting, Sensitivity::Mde};
            const auto feats_std = features_for(population, std_mode, slide, config.denom);
            const auto feats_mde = features_for(population, mde_mode, slide, config.denom);
            std::vector<UserFeatures> ext_std, ext_mde;
            if (external) {
                ext_std = features_for(*external, std_mode, slide, config.denom);
                ext_mde = features_for(*external, mde_mode, slide, config.denom);
            }

            CvConfig cv;
            cv.folds = config.folds;
            cv.seed = cell_seed;  // identical fold splits across the cell's variants

            std::vector<double> all_feats_held_f1;
            std::vector<double> all_feats_ext_f1;
            std::uint64_t variant_index = 0;
            for (const auto& spec : variants) {
                const FeatureConfig fc = feature_config_for(spec, setting, slide);
                TrainConfig train = config.train;
                train.seed = mix_seed(cell_seed, 0x7A00 + variant_index++);
                const auto& pop = spec.mde ? feats_mde : feats_std;
                const auto& ext = spec.mde ? ext_mde : ext_std;
                VariantResult vr;
                vr.spec = spec;
                vr.cv = cross_validate(pop, ext, fc, population.dim, config.hyper, train, cv);
                if (spec.name == "all-feats") {
                    all_feats_held_f1 = vr.cv.held_out_f1();
                    all_feats_ext_f1 = vr.cv.external_f1();
                } else if (!all_feats_held_f1.empty()) {
                    const auto f1 = vr.cv.held_out_f1();
                    vr.p_held_out = paired_t(f1, all_feats_held_f1).p;
                    vr.worse_held_out = *vr.p_held_out < 0.05 &&
                                        mean(f1) < mean(all_feats_held_f1);
                    if (!all_feats_ext_f1.empty()) {
                        const auto ef1 = vr.cv.external_f1();
                        vr.p_external = paired_t(ef1, all_feats_ext_f1).p;
                        vr.worse_external = *vr.p_external < 0.05 &&
                                            mean(ef1) < mean(all_feats_ext_f1);
                    }
                }
                cell.variants.push_back(std::move(vr));
            }
            report.cells.push_back(std::move(cell));
        }
    }

    // HTS baseline: no slide/setting dependence, reported once.
    {
        TrainConfig train = config.train;
        train.seed = mix_seed(config.seed, 0x4753);
        CvConfig cv;
        cv.folds = config.folds;
        cv.seed = mix_seed(config.seed, 0x4754);
        VariantResult vr;
        vr.spec = hts_variant();
        vr.cv = cross_validate_hts(population.users,
                                   external ? std::span<const PreparedUser>(external->users)
                                            : std::span<const PreparedUser>(),
                                   population.dim, train, cv);
        report.hts = std::move(vr);
    }
    return report;
}

}  // namespace tdm
