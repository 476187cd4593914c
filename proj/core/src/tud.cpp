#include "tdm/tud.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "tdm/error.hpp"
#include "tdm/rng.hpp"

namespace tdm {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

int FeatureConfig::episode_dim(int embedding_dim) const {
    if (fusion == Fusion::MultiplyDsIntoEs) return embedding_dim;
    const int tp_dim = use_tp ? (ablate_is ? 0 : 1) + (ablate_drfs ? 0 : 1) : 0;
    return embedding_dim * (use_es ? 1 : 0) + (use_ds ? 1 : 0) + (use_ar ? 1 : 0) + tp_dim;
}

void FeatureConfig::validate() const {
    if (!use_ds && !use_ar && !use_tp && !use_es)
        throw ValidationError("feature config selects no features");
    if (fusion == Fusion::MultiplyDsIntoEs && (!use_ds || !use_es))
        throw ValidationError("multiplicative fusion requires both DS and ES");
    if (use_tp && ablate_is && ablate_drfs)
        throw ValidationError("disable use_tp instead of ablating both of its components");
    if (slide != 1 && slide != 7 && slide != 14)
        throw ValidationError("slide length must be 1, 7 or 14 days");
}

std::vector<VectorXd> assemble_sequence(const UserFeatures& user, const FeatureConfig& fc,
                                        int embedding_dim) {
    fc.validate();
    if (user.episodes.empty())
        throw ValidationError("user has no episodes: " + user.user_id);
    const double ds_max = fc.mode.sensitivity == Sensitivity::Mde ? 9.0 : 27.0;
    const int dim = fc.episode_dim(embedding_dim);
    std::vector<VectorXd> seq;
    seq.reserve(user.episodes.size());
    for (const auto& e : user.episodes) {
        if (static_cast<int>(e.embedding.size()) != embedding_dim)
            throw ValidationError("episode embedding dimension mismatch");
        VectorXd v(dim);
        const double ds_norm = static_cast<double>(e.dep_score) / ds_max;
        if (fc.fusion == Fusion::MultiplyDsIntoEs) {
            for (int k = 0; k < embedding_dim; ++k)
                v(k) = static_cast<double>(e.embedding[static_cast<size_t>(k)]) * ds_norm;
        } else {
            int at = 0;
            if (fc.use_es)
                for (int k = 0; k < embedding_dim; ++k)
                    v(at++) = static_cast<double>(e.embedding[static_cast<size_t>(k)]);
            if (fc.use_ds) v(at++) = ds_norm;
            if (fc.use_ar) v(at++) = e.absence_ratio;
            if (fc.use_tp) {
                if (!fc.ablate_is) v(at++) = user.tp.is;
                if (!fc.ablate_drfs) v(at++) = user.tp.drfs;
            }
        }
        seq.push_back(std::move(v));
    }
    return seq;
}

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// BCE from the logit: softplus(z) - y*z, stable in both tails.
double bce_from_logit(double z, double y) {
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return softplus - y * z;
}

struct BlockLayout {
    long wx_f, wh_f, b_f;
    long wx_b, wh_b, b_b;
    long attn_w1, attn_w2, attn_v;
    long head_w, head_b;
    long total;
    int input, hidden, attn;

    explicit BlockLayout(const TudConfig& cfg) {
        input = cfg.input_dim;
        hidden = cfg.hidden_dim;
        attn = cfg.attn_dim > 0 ? cfg.attn_dim : cfg.hidden_dim;
        const long g = 4L * hidden;
        long at = 0;
        wx_f = at; at += g * input;
        wh_f = at; at += g * hidden;
        b_f = at; at += g;
        wx_b = at; at += g * input;
        wh_b = at; at += g * hidden;
        b_b = at; at += g;
        attn_w1 = at; at += static_cast<long>(attn) * 2 * hidden;
        attn_w2 = at; at += static_cast<long>(attn) * 2 * hidden;
        attn_v = at; at += attn;
        head_w = at; at += 2L * hidden;
        head_b = at; at += 1;
        total = at;
    }
};

struct LstmCache {
    std::vector<VectorXd> in, ig, fg, cand, og, cell, out;
};

// One direction over `inputs` in the given processing order.
void run_lstm(const Map<const MatrixXd>& wx, const Map<const MatrixXd>& wh,
              const Map<const VectorXd>& b, const std::vector<const VectorXd*>& inputs,
              int hidden, LstmCache& cache) {
    const size_t t_len = inputs.size();
    cache.in.resize(t_len);
    cache.ig.resize(t_len);
    cache.fg.resize(t_len);
    cache.cand.resize(t_len);
    cache.og.resize(t_len);
    cache.cell.resize(t_len);
    cache.out.resize(t_len);
    VectorXd h_prev = VectorXd::Zero(hidden);
    VectorXd c_prev = VectorXd::Zero(hidden);
    for (size_t s = 0; s < t_len; ++s) {
        cache.in[s] = *inputs[s];
        VectorXd a = wx * cache.in[s] + wh * h_prev + b;
        VectorXd& ig = cache.ig[s];
        VectorXd& fg = cache.fg[s];
        VectorXd& cand = cache.cand[s];
        VectorXd& og = cache.og[s];
        ig.resize(hidden);
        fg.resize(hidden);
        cand.resize(hidden);
        og.resize(hidden);
        for (int k = 0; k < hidden; ++k) {
            ig(k) = sigmoid(a(k));
            fg(k) = sigmoid(a(hidden + k));
            cand(k) = std::tanh(a(2 * hidden + k));
            og(k) = sigmoid(a(3 * hidden + k));
        }
        cache.cell[s] = fg.cwiseProduct(c_prev) + ig.cwiseProduct(cand);
        cache.out[s] = og.cwiseProduct(cache.cell[s].array().tanh().matrix());
        h_prev = cache.out[s];
        c_prev = cache.cell[s];
    }
}

// BPTT for one direction; dh_ext holds per-step gradients from above.
// Input gradients are not propagated (dropout carries no parameters).
void backprop_lstm(const Map<const MatrixXd>& wh, const LstmCache& cache,
                   const std::vector<VectorXd>& dh_ext, int hidden, Map<MatrixXd> g_wx,
                   Map<MatrixXd> g_wh, Map<VectorXd> g_b) {
    const size_t t_len = cache.in.size();
    VectorXd dh_next = VectorXd::Zero(hidden);
    VectorXd dc_next = VectorXd::Zero(hidden);
    VectorXd da(4 * hidden);
    for (size_t s = t_len; s-- > 0;) {
        const VectorXd dh = dh_ext[s] + dh_next;
        const VectorXd tc = cache.cell[s].array().tanh().matrix();
        const VectorXd d_og = dh.cwiseProduct(tc);
        const VectorXd dc =
            dc_next + dh.cwiseProduct(cache.og[s])
                          .cwiseProduct((1.0 - tc.array().square()).matrix());
        const VectorXd c_prev = s > 0 ? cache.cell[s - 1] : VectorXd::Zero(hidden);
        const VectorXd h_prev = s > 0 ? cache.out[s - 1] : VectorXd::Zero(hidden);
        const VectorXd d_fg = dc.cwiseProduct(c_prev);
        const VectorXd d_ig = dc.cwiseProduct(cache.cand[s]);
        const VectorXd d_cand = dc.cwiseProduct(cache.ig[s]);
        da.segment(0, hidden) =
            d_ig.cwiseProduct(cache.ig[s]).cwiseProduct((1.0 - cache.ig[s].array()).matrix());
        da.segment(hidden, hidden) =
            d_fg.cwiseProduct(cache.fg[s]).cwiseProduct((1.0 - cache.fg[s].array()).matrix());
        da.segment(2 * hidden, hidden) =
            d_cand.cwiseProduct((1.0 - cache.cand[s].array().square()).matrix());
        da.segment(3 * hidden, hidden) =
            d_og.cwiseProduct(cache.og[s]).cwiseProduct((1.0 - cache.og[s].array()).matrix());
        g_wx.noalias() += da * cache.in[s].transpose();
        g_wh.noalias() += da * h_prev.transpose();
        g_b += da;
        dh_next.noalias() = wh.transpose() * da;
        dc_next = dc.cwiseProduct(cache.fg[s]);
    }
}

}  // namespace

struct TudModel::Trace {
    LstmCache fwd, bwd;                // bwd step s processes time T-1-s
    std::vector<VectorXd> h_cat;       // 2H per time index
    VectorXd h_final;                  // [fwd last; bwd last]
    std::vector<VectorXd> attn_state;  // tanh(W1 h_i + W2 h_final)
    VectorXd scores;
    VectorXd alpha;
    VectorXd context;
    double logit = 0.0;
    double p = 0.0;
};

TudModel::TudModel(const TudConfig& cfg) : cfg_(cfg) {
    if (cfg_.input_dim < 1) throw ValidationError("tud: input_dim must be >= 1");
    if (cfg_.hidden_dim < 1) throw ValidationError("tud: hidden_dim must be >= 1");
    if (cfg_.dropout < 0 || cfg_.dropout >= 1)
        throw ValidationError("tud: dropout must be in [0,1)");
    if (cfg_.attn_dim == 0) cfg_.attn_dim = cfg_.hidden_dim;
    const BlockLayout lay(cfg_);
    theta_ = VectorXd::Zero(lay.total);
    Rng rng(mix_seed(cfg_.seed, 0x71));
    auto init_uniform = [&](long offset, long rows, long cols, long fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (long k = 0; k < rows * cols; ++k)
            theta_(offset + k) = (2.0 * rng.uniform() - 1.0) * bound;
    };
    const long g = 4L * lay.hidden;
    init_uniform(lay.wx_f, g, lay.input, lay.input);
    init_uniform(lay.wh_f, g, lay.hidden, lay.hidden);
    init_uniform(lay.wx_b, g, lay.input, lay.input);
    init_uniform(lay.wh_b, g, lay.hidden, lay.hidden);
    init_uniform(lay.attn_w1, lay.attn, 2L * lay.hidden, 2L * lay.hidden);
    init_uniform(lay.attn_w2, lay.attn, 2L * lay.hidden, 2L * lay.hidden);
    init_uniform(lay.attn_v, lay.attn, 1, lay.attn);
    init_uniform(lay.head_w, 2L * lay.hidden, 1, 2L * lay.hidden);
    // biases start at zero
}

std::vector<std::pair<std::string, std::pair<long, long>>> TudModel::blocks() const {
    const BlockLayout lay(cfg_);
    const long g = 4L * lay.hidden;
    return {
        {"lstm_fwd_wx", {lay.wx_f, g * lay.input}},
        {"lstm_fwd_wh", {lay.wh_f, g * lay.hidden}},
        {"lstm_fwd_b", {lay.b_f, g}},
        {"lstm_bwd_wx", {lay.wx_b, g * lay.input}},
        {"lstm_bwd_wh", {lay.wh_b, g * lay.hidden}},
        {"lstm_bwd_b", {lay.b_b, g}},
        {"attn_w1", {lay.attn_w1, static_cast<long>(lay.attn) * 2 * lay.hidden}},
        {"attn_w2", {lay.attn_w2, static_cast<long>(lay.attn) * 2 * lay.hidden}},
        {"attn_v", {lay.attn_v, lay.attn}},
        {"head_w", {lay.head_w, 2L * lay.hidden}},
        {"head_b", {lay.head_b, 1}},
    };
}

void TudModel::run(const std::vector<VectorXd>& sequence, Trace& trace) const {
    if (sequence.empty()) throw ValidationError("tud: sequence must contain >= 1 episode");
    const BlockLayout lay(cfg_);
    const int hidden = lay.hidden;
    const size_t t_len = sequence.size();
    for (const auto& x : sequence)
        if (x.size() != lay.input)
            throw ValidationError("tud: episode vector dimension mismatch");

    const double* th = theta_.data();
    const long g = 4L * hidden;
    Map<const MatrixXd> wx_f(th + lay.wx_f, g, lay.input);
    Map<const MatrixXd> wh_f(th + lay.wh_f, g, hidden);
    Map<const VectorXd> b_f(th + lay.b_f, g);
    Map<const MatrixXd> wx_b(th + lay.wx_b, g, lay.input);
    Map<const MatrixXd> wh_b(th + lay.wh_b, g, hidden);
    Map<const VectorXd> b_b(th + lay.b_b, g);
    Map<const VectorXd> head_w(th + lay.head_w, 2 * hidden);

    std::vector<const VectorXd*> fwd_in(t_len), bwd_in(t_len);
    for (size_t i = 0; i < t_len; ++i) {
        fwd_in[i] = &sequence[i];
        bwd_in[i] = &sequence[t_len - 1 - i];
    }
    run_lstm(wx_f, wh_f, b_f, fwd_in, hidden, trace.fwd);
    run_lstm(wx_b, wh_b, b_b, bwd_in, hidden, trace.bwd);

    trace.h_cat.resize(t_len);
    for (size_t i = 0; i < t_len; ++i) {
        trace.h_cat[i].resize(2 * hidden);
        trace.h_cat[i] << trace.fwd.out[i], trace.bwd.out[t_len - 1 - i];
    }
    trace.h_final.resize(2 * hidden);
    trace.h_final << trace.fwd.out[t_len - 1], trace.bwd.out[t_len - 1];

    // Additive attention conditioned on the final state.
    Map<const MatrixXd> w1(th + lay.attn_w1, lay.attn, 2 * hidden);
    Map<const MatrixXd> w2(th + lay.attn_w2, lay.attn, 2 * hidden);
    Map<const VectorXd> v(th + lay.attn_v, lay.attn);
    const VectorXd cond = w2 * trace.h_final;
    trace.attn_state.resize(t_len);
    trace.scores.resize(static_cast<long>(t_len));
    for (size_t i = 0; i < t_len; ++i) {
        trace.attn_state[i] = ((w1 * trace.h_cat[i] + cond).array().tanh()).matrix();
        trace.scores(static_cast<long>(i)) = v.dot(trace.attn_state[i]);
    }
    const double max_score = trace.scores.maxCoeff();
    trace.alpha = (trace.scores.array() - max_score).exp().matrix();
    trace.alpha /= trace.alpha.sum();

    trace.context = VectorXd::Zero(2 * hidden);
    for (size_t i = 0; i < t_len; ++i)
        trace.context += trace.alpha(static_cast<long>(i)) * trace.h_cat[i];

    trace.logit = head_w.dot(trace.context) + theta_(lay.head_b);
    trace.p = sigmoid(trace.logit);
    if (!std::isfinite(trace.p))
        throw NumericalFault("tud: non-finite activation in forward pass (sequence length " +
                             std::to_string(t_len) + ")");
}

ForwardResult TudModel::forward(const std::vector<VectorXd>& sequence) const {
    Trace trace;
    run(sequence, trace);
    return ForwardResult{trace.p, trace.alpha};
}

int TudModel::predict(const std::vector<VectorXd>& sequence) const {
    return forward(sequence).probability > 0.5 ? 1 : 0;
}

std::pair<VectorXd, VectorXd> TudModel::attention_pool(const std::vector<VectorXd>& states,
                                                       const VectorXd& final_state) const {
    if (states.empty()) throw ValidationError("tud: attention over empty state list");
    const BlockLayout lay(cfg_);
    const double* th = theta_.data();
    Map<const MatrixXd> w1(th + lay.attn_w1, lay.attn, 2 * lay.hidden);
    Map<const MatrixXd> w2(th + lay.attn_w2, lay.attn, 2 * lay.hidden);
    Map<const VectorXd> v(th + lay.attn_v, lay.attn);
    const VectorXd cond = w2 * final_state;
    VectorXd scores(static_cast<long>(states.size()));
    for (size_t i = 0; i < states.size(); ++i)
        scores(static_cast<long>(i)) = v.dot(((w1 * states[i] + cond).array().tanh()).matrix());
    VectorXd alpha = (scores.array() - scores.maxCoeff()).exp().matrix();
    alpha /= alpha.sum();
    VectorXd context = VectorXd::Zero(2 * lay.hidden);
    for (size_t i = 0; i < states.size(); ++i)
        context += alpha(static_cast<long>(i)) * states[i];
    return {alpha, context};
}

double TudModel::loss(const std::vector<VectorXd>& sequence, double label) const {
    Trace trace;
    run(sequence, trace);
    return bce_from_logit(trace.logit, label);
}

double TudModel::loss_grad(const std::vector<VectorXd>& sequence, double label,
                           VectorXd& grad) const {
    Trace trace;
    run(sequence, trace);
    const BlockLayout lay(cfg_);
    const int hidden = lay.hidden;
    const size_t t_len = sequence.size();
    if (grad.size() != theta_.size()) grad = VectorXd::Zero(theta_.size());

    const double* th = theta_.data();
    double* gd = grad.data();
    const long g = 4L * hidden;
    Map<const MatrixXd> wx_f(th + lay.wx_f, g, lay.input);
    Map<const MatrixXd> wh_f(th + lay.wh_f, g, hidden);
    Map<const MatrixXd> wx_b(th + lay.wx_b, g, lay.input);
    Map<const MatrixXd> wh_b(th + lay.wh_b, g, hidden);
    Map<const MatrixXd> w1(th + lay.attn_w1, lay.attn, 2 * hidden);
    Map<const MatrixXd> w2(th + lay.attn_w2, lay.attn, 2 * hidden);
    Map<const VectorXd> v(th + lay.attn_v, lay.attn);
    Map<const VectorXd> head_w(th + lay.head_w, 2 * hidden);

    Map<MatrixXd> g_wx_f(gd + lay.wx_f, g, lay.input);
    Map<MatrixXd> g_wh_f(gd + lay.wh_f, g, hidden);
    Map<VectorXd> g_b_f(gd + lay.b_f, g);
    Map<MatrixXd> g_wx_b(gd + lay.wx_b, g, lay.input);
    Map<MatrixXd> g_wh_b(gd + lay.wh_b, g, hidden);
    Map<VectorXd> g_b_b(gd + lay.b_b, g);
    Map<MatrixXd> g_w1(gd + lay.attn_w1, lay.attn, 2 * hidden);
    Map<MatrixXd> g_w2(gd + lay.attn_w2, lay.attn, 2 * hidden);
    Map<VectorXd> g_v(gd + lay.attn_v, lay.attn);
    Map<VectorXd> g_head_w(gd + lay.head_w, 2 * hidden);

    // Head.
    const double dz = trace.p - label;
    g_head_w += dz * trace.context;
    grad(lay.head_b) += dz;
    const VectorXd d_context = dz * head_w;

    // Attention.
    VectorXd d_alpha(static_cast<long>(t_len));
    std::vector<VectorXd> dh(t_len, VectorXd::Zero(2 * hidden));
    for (size_t i = 0; i < t_len; ++i) {
        d_alpha(static_cast<long>(i)) = trace.h_cat[i].dot(d_context);
        dh[i] += trace.alpha(static_cast<long>(i)) * d_context;
    }
    const double dot = trace.alpha.dot(d_alpha);
    VectorXd dh_final = VectorXd::Zero(2 * hidden);
    for (size_t i = 0; i < t_len; ++i) {
        const double d_score = trace.alpha(static_cast<long>(i)) *
                               (d_alpha(static_cast<long>(i)) - dot);
        const VectorXd d_state = d_score * v;
        g_v += d_score * trace.attn_state[i];
        const VectorXd d_pre =
            d_state.cwiseProduct((1.0 - trace.attn_state[i].array().square()).matrix());
        g_w1.noalias() += d_pre * trace.h_cat[i].transpose();
        g_w2.noalias() += d_pre * trace.h_final.transpose();
        dh[i].noalias() += w1.transpose() * d_pre;
        dh_final.noalias() += w2.transpose() * d_pre;
    }

    // Split per-time gradients into the two directions. The backward
    // direction's cache index for time i is T-1-i; its final state sits at
    // processing step T-1 (time 0 of the original order).
    std::vector<VectorXd> dh_fwd(t_len, VectorXd::Zero(hidden));
    std::vector<VectorXd> dh_bwd(t_len, VectorXd::Zero(hidden));
    for (size_t i = 0; i < t_len; ++i) {
        dh_fwd[i] += dh[i].head(hidden);
        dh_bwd[t_len - 1 - i] += dh[i].tail(hidden);
    }
    dh_fwd[t_len - 1] += dh_final.head(hidden);
    dh_bwd[t_len - 1] += dh_final.tail(hidden);

    backprop_lstm(wh_f, trace.fwd, dh_fwd, hidden, g_wx_f, g_wh_f, g_b_f);
    backprop_lstm(wh_b, trace.bwd, dh_bwd, hidden, g_wx_b, g_wh_b, g_b_b);

    return bce_from_logit(trace.logit, label);
}

std::vector<double> TudModel::fit(std::span<const LabeledSequence> data,
                                  const TrainConfig& train) {
    if (data.empty()) throw ValidationError("tud: empty training set");
    if (train.epochs < 0 || train.batch < 1)
        throw ValidationError("tud: bad training configuration");

    const long n_params = theta_.size();
    VectorXd m = VectorXd::Zero(n_params);
    VectorXd v = VectorXd::Zero(n_params);
    VectorXd grad = VectorXd::Zero(n_params);
    VectorXd seq_grad = VectorXd::Zero(n_params);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    Rng shuffle_rng(mix_seed(train.seed, 0x5F));
    Rng dropout_rng(mix_seed(train.seed, 0xD0));
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});

    std::vector<double> epoch_losses;
    std::vector<VectorXd> masked;
    for (int epoch = 0; epoch < train.epochs; ++epoch) {
        shuffle_rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        size_t cursor = 0;
        int batch_index = 0;
        while (cursor < order.size()) {
            const size_t batch_end = std::min(cursor + static_cast<size_t>(train.batch),
                                              order.size());
            grad.setZero();
            for (size_t k = cursor; k < batch_end; ++k) {
                const LabeledSequence& item = data[order[k]];
                const std::vector<VectorXd>* inputs = &item.inputs;
                if (cfg_.dropout > 0.0) {
                    // Inverted dropout on the episode input vectors only.
                    const double keep = 1.0 - cfg_.dropout;
                    masked.assign(item.inputs.begin(), item.inputs.end());
                    for (auto& x : masked)
                        for (long j = 0; j < x.size(); ++j)
                            x(j) = dropout_rng.bernoulli(keep) ? x(j) / keep : 0.0;
                    inputs = &masked;
                }
                seq_grad.setZero();
                const double item_loss = loss_grad(*inputs, item.label, seq_grad);
                if (!std::isfinite(item_loss))
                    throw NumericalFault("tud: training loss diverged at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_index));
                loss_sum += item_loss;
                grad += seq_grad;
            }
            grad /= static_cast<double>(batch_end - cursor);
            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            m = beta1 * m + (1.0 - beta1) * grad;
            v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
            theta_ -= (train.learning_rate *
                       (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix()));
            ++batch_index;
            cursor = batch_end;
        }
        if (!theta_.allFinite())
            throw NumericalFault("tud: parameters diverged at epoch " + std::to_string(epoch));
        epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));
    }
    return epoch_losses;
}

GradCheckResult gradient_check(const TudModel& model, const std::vector<VectorXd>& sequence,
                               double label, double step) {
    TudModel probe = model;
    VectorXd analytic = VectorXd::Zero(model.parameters().size());
    probe.loss_grad(sequence, label, analytic);

    GradCheckResult result;
    const auto blocks = model.blocks();
    for (const auto& [name, range] : blocks) result.per_block[name] = 0.0;
    VectorXd& theta = probe.parameters();
    for (const auto& [name, range] : blocks) {
        for (long k = range.first; k < range.first + range.second; ++k) {
            const double saved = theta(k);
            theta(k) = saved + step;
            const double up = probe.loss(sequence, label);
            theta(k) = saved - step;
            const double down = probe.loss(sequence, label);
            theta(k) = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double denom =
                std::max({std::abs(analytic(k)), std::abs(numeric), 1e-3});
            const double rel = std::abs(analytic(k) - numeric) / denom;
            result.per_block[name] = std::max(result.per_block[name], rel);
            result.max_rel_error = std::max(result.max_rel_error, rel);
        }
    }
    return result;
}

namespace {

constexpr char kModelMagic[4] = {'T', 'D', 'M', 'M'};
constexpr std::uint32_t kModelVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void save_model_file(const std::string& path, std::uint8_t kind,
                     const std::array<std::uint32_t, 3>& dims, const VectorXd& theta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write model checkpoint: " + path);
    out.write(kModelMagic, 4);
    write_u32(out, kModelVersion);
    out.put(static_cast<char>(kind));
    for (const auto d : dims) write_u32(out, d);
    write_u32(out, static_cast<std::uint32_t>(theta.size()));
    for (long k = 0; k < theta.size(); ++k) {
        const float f = static_cast<float>(theta(k));
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
}

std::pair<std::array<std::uint32_t, 3>, VectorXd> load_model_file(const std::string& path,
                                                                  std::uint8_t expect_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
        throw ParseError("not a model checkpoint: " + path);
    if (read_u32(in) != kModelVersion)
        throw ParseError("unsupported model checkpoint version in " + path);
    const int kind = in.get();
    if (kind != expect_kind)
        throw ValidationError("model checkpoint kind mismatch in " + path);
    std::array<std::uint32_t, 3> dims{};
    for (auto& d : dims) d = read_u32(in);
    const std::uint32_t count = read_u32(in);
    VectorXd theta(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        float f = 0;
        in.read(reinterpret_cast<char*>(&f), sizeof(f));
        theta(k) = static_cast<double>(f);
    }
    if (!in) throw ParseError("truncated model checkpoint: " + path);
    return {dims, std::move(theta)};
}

}  // namespace

void TudModel::save(const std::string& path) const {
    save_model_file(path, 0,
                    {static_cast<std::uint32_t>(cfg_.input_dim),
                     static_cast<std::uint32_t>(cfg_.hidden_dim),
                     static_cast<std::uint32_t>(cfg_.attn_dim)},
                    theta_);
}

TudModel TudModel::load(const std::string& path) {
    auto [dims, theta] = load_model_file(path, 0);
    TudConfig cfg;
    cfg.input_dim = static_cast<int>(dims[0]);
    cfg.hidden_dim = static_cast<int>(dims[1]);
    cfg.attn_dim = static_cast<int>(dims[2]);
    cfg.dropout = 0.0;  // inference checkpoints carry no dropout state
    TudModel model(cfg);
    if (model.theta_.size() != theta.size())
        throw ParseError("model checkpoint parameter count mismatch in " + path);
    model.theta_ = std::move(theta);
    return model;
}

HtsModel::HtsModel(int input_dim, std::uint64_t seed) : input_dim_(input_dim) {
    if (input_dim < 1) throw ValidationError("hts: input_dim must be >= 1");
    theta_ = VectorXd::Zero(input_dim + 1);
    Rng rng(mix_seed(seed, 0x47));
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (int k = 0; k < input_dim; ++k) theta_(k) = (2.0 * rng.uniform() - 1.0) * bound;
}

double HtsModel::forward(const VectorXd& input) const {
    if (input.size() != input_dim_) throw ValidationError("hts: input dimension mismatch");
    return sigmoid(theta_.head(input_dim_).dot(input) + theta_(input_dim_));
}

int HtsModel::predict(const VectorXd& input) const { return forward(input) > 0.5 ? 1 : 0; }

std::vector<double> HtsModel::fit(std::span<const std::pair<VectorXd, double>> data,
                                  const TrainConfig& train) {
    if (data.empty()) throw ValidationError("hts: empty training set");
    VectorXd m = VectorXd::Zero(theta_.size());
    VectorXd v = VectorXd::Zero(theta_.size());
    VectorXd grad = VectorXd::Zero(theta_.size());
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;
    Rng shuffle_rng(mix_seed(train.seed, 0x5F));
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});

    std::vector<double> epoch_losses;
    for (int epoch = 0; epoch < train.epochs; ++epoch) {
        shuffle_rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        size_t cursor = 0;
        while (cursor < order.size()) {
            const size_t batch_end =
                std::min(cursor + static_cast<size_t>(train.batch), order.size());
            grad.setZero();
            for (size_t k = cursor; k < batch_end; ++k) {
                const auto& [x, y] = data[order[k]];
                const double z = theta_.head(input_dim_).dot(x) + theta_(input_dim_);
                const double p = sigmoid(z);
                loss_sum += bce_from_logit(z, y);
                grad.head(input_dim_) += (p - y) * x;
                grad(input_dim_) += p - y;
            }
            grad /= static_cast<double>(batch_end - cursor);
            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            m = beta1 * m + (1.0 - beta1) * grad;
            v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
            theta_ -= (train.learning_rate *
                       (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix()));
            cursor = batch_end;
        }
        if (!theta_.allFinite())
            throw NumericalFault("hts: parameters diverged at epoch " + std::to_string(epoch));
        epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));
    }
    return epoch_losses;
}

void HtsModel::save(const std::string& path) const {
    save_model_file(path, 1, {static_cast<std::uint32_t>(input_dim_), 0, 0}, theta_);
}

HtsModel HtsModel::load(const std::string& path) {
    auto [dims, theta] = load_model_file(path, 1);
    HtsModel model(static_cast<int>(dims[0]), 0);
    if (model.theta_.size() != theta.size())
        throw ParseError("model checkpoint parameter count mismatch in " + path);
    model.theta_ = std::move(theta);
    return model;
}

}  // namespace tdm
