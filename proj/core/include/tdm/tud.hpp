#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tdm/pipeline.hpp"
#include "tdm/scoring.hpp"

namespace tdm {

enum class Fusion { Concat, MultiplyDsIntoEs };

// Feature selection for episode vector assembly.
struct FeatureConfig {
    bool use_ds = true;
    bool use_ar = true;
    bool use_tp = true;  // the {IS, DRFS} pair
    bool use_es = true;
    // Drop one half of the TP pair while use_tp stays on (grid ablations).
    bool ablate_is = false;
    bool ablate_drfs = false;
    Fusion fusion = Fusion::Concat;
    ScoringMode mode;
    int slide = 1;

    // Concat: D*es + ds + ar + 2*tp; MultiplyDsIntoEs: D.
    int episode_dim(int embedding_dim) const;
    void validate() const;
};

// Per-episode vectors, order [ELSEA | DS/max | AR | IS | DRFS] for enabled
// features; DS is normalized by its mode maximum (27 Standard, 9 MDE) and the
// user-level temporal scalars broadcast to every episode.
std::vector<Eigen::VectorXd> assemble_sequence(const UserFeatures& user, const FeatureConfig& fc,
                                               int embedding_dim);

struct TrainConfig {
    int epochs = 10;
    int batch = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

struct TudConfig {
    int input_dim = 0;
    int hidden_dim = 100;
    int attn_dim = 0;  // 0 -> hidden_dim
    double dropout = 0.1;
    std::uint64_t seed = 0;
};

struct ForwardResult {
    double probability = 0.0;
    Eigen::VectorXd attention;  // alpha_i, sums to 1
};

struct LabeledSequence {
    std::vector<Eigen::VectorXd> inputs;
    double label = 0.0;  // 1 depressed, 0 control
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::map<std::string, double> per_block;
};

// BiLSTM encoder, additive attention pooling conditioned on the final hidden
// state, dense sigmoid head. Double precision; training is plain BPTT with
// Adam on BCE.
class TudModel {
public:
    explicit TudModel(const TudConfig& cfg);

    ForwardResult forward(const std::vector<Eigen::VectorXd>& sequence) const;
    int predict(const std::vector<Eigen::VectorXd>& sequence) const;  // p > 0.5

    // Attention pooling over already-encoded states; exposed for inspection.
    // Returns (alpha, context).
    std::pair<Eigen::VectorXd, Eigen::VectorXd> attention_pool(
        const std::vector<Eigen::VectorXd>& states, const Eigen::VectorXd& final_state) const;

    double loss(const std::vector<Eigen::VectorXd>& sequence, double label) const;

    // BCE loss and full analytic parameter gradient, accumulated into `grad`.
    double loss_grad(const std::vector<Eigen::VectorXd>& sequence, double label,
                     Eigen::VectorXd& grad) const;

    // Mini-batch Adam; deterministic given cfg.seed/train.seed. Returns mean
    // per-epoch training loss. Throws NumericalFault on divergence.
    std::vector<double> fit(std::span<const LabeledSequence> data, const TrainConfig& train);

    const TudConfig& config() const { return cfg_; }
    const Eigen::VectorXd& parameters() const { return theta_; }
    Eigen::VectorXd& parameters() { return theta_; }

    void save(const std::string& path) const;
    static TudModel load(const std::string& path);

    // Named parameter block ranges (offset, size) in the flat vector.
    std::vector<std::pair<std::string, std::pair<long, long>>> blocks() const;

private:
    struct Trace;
    void run(const std::vector<Eigen::VectorXd>& sequence, Trace& trace) const;

    TudConfig cfg_;
    Eigen::VectorXd theta_;
};

// Central-difference check of the analytic gradients (step 1e-4). Relative
// error uses a 1e-3 magnitude floor so saturated near-zero coordinates do
// not dominate the report.
GradCheckResult gradient_check(const TudModel& model, const std::vector<Eigen::VectorXd>& sequence,
                               double label, double step = 1e-4);

// All-history baseline: single dense layer + sigmoid over ATEA.
class HtsModel {
public:
    HtsModel(int input_dim, std::uint64_t seed);

    double forward(const Eigen::VectorXd& input) const;
    int predict(const Eigen::VectorXd& input) const;
    std::vector<double> fit(std::span<const std::pair<Eigen::VectorXd, double>> data,
                            const TrainConfig& train);

    const Eigen::VectorXd& parameters() const { return theta_; }
    Eigen::VectorXd& parameters() { return theta_; }
    int input_dim() const { return input_dim_; }

    void save(const std::string& path) const;
    static HtsModel load(const std::string& path);

private:
    int input_dim_;
    Eigen::VectorXd theta_;  // [w, b]
};

}  // namespace tdm
