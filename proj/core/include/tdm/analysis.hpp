#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdm/corpus.hpp"
#include "tdm/pipeline.hpp"
#include "tdm/tud.hpp"

namespace tdm {

// ---- dataset statistics ----------------------------------------------------

struct UserStats {
    long n_tweets = 0;
    long n_proper_tweets = 0;
    int n_days = 0;
    double afp = 0.0;  // mean inter-post gap, fractional days
    double fpf = 0.0;  // sample std dev of gaps; 0 with fewer than 2 gaps
    double avg_tweet_len = 0.0;
    double avg_sents = 0.0;
};

UserStats user_stats(const UserTimeline& timeline);

long count_tokens(std::string_view text);
long count_sentences(std::string_view text);  // split on . ? !

double mean(std::span<const double> values);
double sample_std(std::span<const double> values);  // n-1 denominator

// ---- significance tests ----------------------------------------------------

// I_x(a, b), relative error <= 1e-8 over the t-test range.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_two_tailed_p(double t, double dof);

struct TTestResult {
    double t = 0.0;
    double dof = 0.0;
    double p = 1.0;
};

// Welch's two-tailed unpaired t-test; both samples need >= 2 values.
// Zero variance on both sides with equal means yields p = 1 by convention.
TTestResult welch_t(std::span<const double> a, std::span<const double> b);

// Two-tailed paired t-test on equal-length samples (>= 2).
TTestResult paired_t(std::span<const double> a, std::span<const double> b);

// ---- lexicon component intensity --------------------------------------------

// Arbitrary category -> word list; matching is on whitespace tokens of the
// preprocessed digest with edge punctuation stripped.
using CategoryLexicon = std::vector<std::pair<std::string, std::vector<std::string>>>;

CategoryLexicon load_category_lexicon(const std::string& path);

std::string build_digest(const Corpus& corpus, Label label);

struct LciEntry {
    std::string category;
    double lci_d = 0.0;  // percentage in the depressed digest
    double lci_c = 0.0;
    double dev = 0.0;    // lci_d - lci_c
};

std::vector<LciEntry> lci_analysis(const std::string& depressed_digest,
                                   const std::string& control_digest,
                                   const CategoryLexicon& lexicon);

struct DevSummary {
    double avg = 0.0;
    double stddev = 0.0;  // sample std dev
};

// Cross-dataset mean and sample std of per-dataset deviations.
DevSummary deviation_summary(std::span<const double> deviations);

// ---- cross validation -------------------------------------------------------

struct FoldMetrics {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Metrics for the depressed (positive) class.
FoldMetrics classification_metrics(std::span<const int> predicted, std::span<const int> actual);

struct MetricSummary {
    double precision_mean = 0.0, precision_std = 0.0;
    double recall_mean = 0.0, recall_std = 0.0;
    double f1_mean = 0.0, f1_std = 0.0;
};

struct CvResult {
    std::vector<FoldMetrics> held_out;  // one entry per fold
    std::vector<FoldMetrics> external;  // empty without an external test set

    MetricSummary held_out_summary() const;
    MetricSummary external_summary() const;
    std::vector<double> held_out_f1() const;
    std::vector<double> external_f1() const;
};

struct ModelHyper {
    int hidden_dim = 100;
    int attn_dim = 0;  // 0 -> hidden_dim
    double dropout = 0.1;
};

struct CvConfig {
    int folds = 10;
    std::uint64_t seed = 0;
};

// Stratified user-level CV of a TUD variant. `population` and `external`
// must have been extracted under fc.mode / fc.slide.
CvResult cross_validate(std::span<const UserFeatures> population,
                        std::span<const UserFeatures> external, const FeatureConfig& fc,
                        int embedding_dim, const ModelHyper& hyper, const TrainConfig& train,
                        const CvConfig& cv);

// Dense-over-ATEA baseline under the same protocol.
CvResult cross_validate_hts(std::span<const PreparedUser> population,
                            std::span<const PreparedUser> external, int embedding_dim,
                            const TrainConfig& train, const CvConfig& cv);

// ---- experiment grid ----------------------------------------------------------

struct VariantSpec {
    std::string name;
    std::string category;
    bool hts = false;
    bool mde = false;
    Fusion fusion = Fusion::Concat;
    bool use_ds = false, use_ar = false, use_tp = false, use_es = false;
    bool ablate_is = false, ablate_drfs = false;
};

// The 14 per-cell variants (ablations, single features, ES baseline); HTS is
// listed separately because it has no slide/setting dependence.
std::vector<VariantSpec> standard_variants();
VariantSpec hts_variant();

struct GridConfig {
    std::vector<int> slides{1, 7, 14};
    std::vector<ClinicalSetting> settings{ClinicalSetting::Clinical,
                                          ClinicalSetting::NonClinical};
    int folds = 10;
    TrainConfig train;
    ModelHyper hyper;
    DenominatorPolicy denom = DenominatorPolicy::ActiveDays;
    std::uint64_t seed = 0;
};

struct VariantResult {
    VariantSpec spec;
    CvResult cv;
    // Paired t of per-fold F1 against the same cell's all-feats model.
    std::optional<double> p_held_out;
    std::optional<double> p_external;
    bool worse_held_out = false;  // p < 0.05 and lower mean F1
    bool worse_external = false;
};

struct CellResult {
    int slide = 0;
    ClinicalSetting setting = ClinicalSetting::NonClinical;
    std::vector<VariantResult> variants;
};

struct GridReport {
    std::vector<CellResult> cells;
    std::optional<VariantResult> hts;

    std::string to_json() const;  // byte-stable for a fixed seed
    std::string to_csv() const;
};

GridReport run_experiment_grid(const PreparedCorpus& population, const PreparedCorpus* external,
                               const GridConfig& config);

}  // namespace tdm
