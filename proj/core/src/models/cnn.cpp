#include "gsb/models/cnn.hpp"

#include "gsb/error.hpp"
#include "gsb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gsb::models {
namespace {

using nn::Parameter;
using nn::Shape;
using nn::Tensor;
using nn::Var;

constexpr std::size_t kC1 = 16, kC2 = 32, kC3 = 64, kHidden = 32;
// Three 2x2 pools leave 16 mel bins; keeping them preserves absolute frequency.
constexpr std::size_t kTrunkWidth = kC3 * (kInputMels / 8);

Parameter he_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return {name, std::move(t)};
}

Parameter zeros(const std::string& name, Shape shape) { return {name, Tensor(std::move(shape))}; }

// Order fixed: it defines checkpoint layout and the optimizer state order.
template <typename M>
auto param_list(M& m) {
  return std::array{&m.conv1_w, &m.conv1_b, &m.conv2_w, &m.conv2_b, &m.conv3_w, &m.conv3_b, &m.det1_w,
                    &m.det1_b,  &m.det2_w,  &m.det2_b,  &m.type1_w, &m.type1_b, &m.type2_w, &m.type2_b};
}

CnnGraph build(nn::Tape& tape, const std::array<Var, 14>& p, std::span<const Matrix<double>* const> inputs,
               std::size_t frames) {
  require(!inputs.empty(), ErrorCode::ShapeMismatch, "empty CNN batch");
  Tensor x({inputs.size(), 1, frames, kInputMels});
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto& m = *inputs[b];
    require(m.rows() == frames && m.cols() == kInputMels, ErrorCode::ShapeMismatch,
            "CNN input must be " + std::to_string(frames) + "x" + std::to_string(kInputMels) + ", got " +
                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    std::copy(m.values().begin(), m.values().end(), x.ptr() + b * frames * kInputMels);
  }
  Var h = tape.constant(std::move(x));
  h = nn::maxpool2d(nn::relu(nn::conv2d(h, p[0], p[1], 1, 1)));
  h = nn::maxpool2d(nn::relu(nn::conv2d(h, p[2], p[3], 1, 1)));
  h = nn::maxpool2d(nn::relu(nn::conv2d(h, p[4], p[5], 1, 1)));
  const Var trunk = nn::time_max_pool(h);
  const Var det = nn::sigmoid(nn::dense(nn::relu(nn::dense(trunk, p[6], p[7])), p[8], p[9]));
  const Var type = nn::dense(nn::relu(nn::dense(trunk, p[10], p[11])), p[12], p[13]);
  return {det, type, trunk};
}

Prediction to_prediction(double p, std::span<const double> posteriors, double threshold) {
  Prediction out;
  out.p_gunshot = p;
  std::copy(posteriors.begin(), posteriors.end(), out.type_posteriors.begin());
  out.detected = p >= threshold;
  out.decided_class = out.detected ? static_cast<int>(out.argmax_type()) : -1;
  return out;
}

std::vector<Matrix<double>> prepare_all(const JointCnnModel& model, const CnnDataset& data) {
  std::vector<Matrix<double>> out;
  out.reserve(data.mels.size());
  for (const auto& m : data.mels) out.push_back(prepare_input(m, model.input_mean, model.input_std, model.input_frames));
  return out;
}

double batched_loss(const JointCnnModel& model, const std::vector<Matrix<double>>& inputs, std::span<const int> labels,
                    double lambda_type, std::size_t batch) {
  double total = 0.0;
  nn::Tape tape;
  for (std::size_t start = 0; start < inputs.size(); start += batch) {
    const std::size_t end = std::min(inputs.size(), start + batch);
    std::vector<const Matrix<double>*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&inputs[i]);
    tape.reset();
    std::array<Var, 14> vars;
    const auto params = param_list(model);
    for (std::size_t i = 0; i < params.size(); ++i) vars[i] = tape.constant(params[i]->value);
    const auto graph = build(tape, vars, ptrs, model.input_frames);
    total += joint_loss(graph, labels.subspan(start, end - start), lambda_type).value().item() *
             static_cast<double>(end - start);
  }
  return total / static_cast<double>(inputs.size());
}

}  // namespace

JointCnnModel JointCnnModel::init(std::uint64_t seed, std::size_t input_frames) {
  require(input_frames >= 8, ErrorCode::InvalidParam, "input_frames must be at least 8");
  Rng rng(seed);
  JointCnnModel m;
  m.input_frames = input_frames;
  m.conv1_w = he_uniform("conv1.w", {kC1, 1, 3, 3}, 9, rng);
  m.conv1_b = zeros("conv1.b", {kC1});
  m.conv2_w = he_uniform("conv2.w", {kC2, kC1, 3, 3}, kC1 * 9, rng);
  m.conv2_b = zeros("conv2.b", {kC2});
  m.conv3_w = he_uniform("conv3.w", {kC3, kC2, 3, 3}, kC2 * 9, rng);
  m.conv3_b = zeros("conv3.b", {kC3});
  m.det1_w = he_uniform("det1.w", {kHidden, kTrunkWidth}, kTrunkWidth, rng);
  m.det1_b = zeros("det1.b", {kHidden});
  m.det2_w = he_uniform("det2.w", {1, kHidden}, kHidden, rng);
  m.det2_b = zeros("det2.b", {1});
  m.type1_w = he_uniform("type1.w", {kHidden, kTrunkWidth}, kTrunkWidth, rng);
  m.type1_b = zeros("type1.b", {kHidden});
  m.type2_w = he_uniform("type2.w", {kNumClasses, kHidden}, kHidden, rng);
  m.type2_b = zeros("type2.b", {kNumClasses});
  return m;
}

std::vector<Parameter*> JointCnnModel::parameters() {
  const auto a = param_list(*this);
  return {a.begin(), a.end()};
}

std::vector<const Parameter*> JointCnnModel::parameters() const {
  const auto a = param_list(*this);
  return {a.begin(), a.end()};
}

std::vector<nn::NamedTensor> JointCnnModel::tensors() const {
  std::vector<nn::NamedTensor> out;
  for (const auto* p : parameters()) out.push_back({p->name, p->value});
  out.push_back({"input.stats", Tensor({3}, {input_mean, input_std, static_cast<double>(input_frames)})});
  return out;
}

JointCnnModel JointCnnModel::from_tensors(const std::vector<nn::NamedTensor>& tensors) {
  JointCnnModel m = init(0);
  auto take = [&](const std::string& name) -> const Tensor& {
    for (const auto& t : tensors)
      if (t.name == name) return t.value;
    fail(ErrorCode::CorruptFile, "CNN checkpoint lacks tensor " + name);
  };
  for (auto* p : m.parameters()) {
    const auto& t = take(p->name);
    require(t.shape() == p->value.shape(), ErrorCode::CorruptFile,
            "tensor " + p->name + " has shape " + nn::shape_string(t.shape()) + ", expected " +
                nn::shape_string(p->value.shape()));
    p->value = t;
    p->zero_grad();
  }
  const auto& stats = take("input.stats");
  require(stats.size() == 3, ErrorCode::CorruptFile, "input.stats must hold 3 values");
  m.input_mean = stats[0];
  m.input_std = stats[1];
  m.input_frames = static_cast<std::size_t>(stats[2]);
  return m;
}

std::uint64_t JointCnnModel::checksum() const { return fnv1a64(nn::encode_checkpoint(tensors())); }

std::string cnn_architecture() {
  return "conv3x3p1[1-16,16-32,32-64]+relu+maxpool2;gap;det[64-32-relu-1-sigmoid];type[64-32-relu-5-softmax];mels=128";
}

std::size_t Prediction::argmax_type() const {
  return static_cast<std::size_t>(std::max_element(type_posteriors.begin(), type_posteriors.end()) -
                                  type_posteriors.begin());
}

Matrix<double> prepare_input(const Matrix<double>& mel, double mean, double std, std::size_t frames) {
  require(mel.cols() == kInputMels, ErrorCode::ShapeMismatch,
          "mel input must have " + std::to_string(kInputMels) + " bands, got " + std::to_string(mel.cols()));
  require(std > 0.0, ErrorCode::InvalidParam, "input std must be positive");
  Matrix<double> out(frames, kInputMels, 0.0);
  const std::size_t rows = mel.rows();
  const std::size_t src0 = rows > frames ? (rows - frames) / 2 : 0;
  const std::size_t dst0 = rows < frames ? (frames - rows) / 2 : 0;
  const std::size_t n = std::min(rows, frames);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < kInputMels; ++c) out(dst0 + r, c) = (mel(src0 + r, c) - mean) / std;
  return out;
}

CnnGraph cnn_graph(nn::Tape& tape, JointCnnModel& model, std::span<const Matrix<double>* const> inputs,
                   bool trainable) {
  std::array<Var, 14> vars;
  const auto params = param_list(model);
  for (std::size_t i = 0; i < params.size(); ++i)
    vars[i] = trainable ? tape.param(*params[i]) : tape.constant(params[i]->value);
  return build(tape, vars, inputs, model.input_frames);
}

Prediction cnn_forward(const JointCnnModel& model, const Matrix<double>& mel, double threshold) {
  const auto input = prepare_input(mel, model.input_mean, model.input_std, model.input_frames);
  const Matrix<double>* ptr = &input;
  nn::Tape tape;
  std::array<Var, 14> vars;
  const auto params = param_list(model);
  for (std::size_t i = 0; i < params.size(); ++i) vars[i] = tape.constant(params[i]->value);
  const auto graph = build(tape, vars, std::span(&ptr, 1), model.input_frames);
  const Var post = nn::softmax(graph.type_logits);
  return to_prediction(graph.p_gunshot.value()[0], post.value().data(), threshold);
}

double joint_loss(const Prediction& pred, bool is_gunshot, int type_label, double lambda_type) {
  double loss = nn::bce_value(pred.p_gunshot, is_gunshot ? 1.0 : 0.0);
  if (is_gunshot) {
    require(type_label >= 0 && type_label < static_cast<int>(kNumClasses), ErrorCode::InvalidParam,
            "positive example needs a type label");
    const double q = pred.type_posteriors[static_cast<std::size_t>(type_label)];
    loss += lambda_type * -std::log(std::max(q, std::numeric_limits<double>::min()));
  }
  return loss;
}

Var joint_loss(const CnnGraph& graph, std::span<const int> labels, double lambda_type) {
  require(lambda_type >= 0.0, ErrorCode::InvalidParam, "lambda_type must be >= 0");
  const std::size_t n = labels.size();
  require(graph.p_gunshot.shape() == Shape{n, 1}, ErrorCode::ShapeMismatch, "one label per batch row required");
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<double> y(n), w_det(n, inv), w_type(n);
  std::vector<int> cls(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = labels[i] >= 0;
    y[i] = pos ? 1.0 : 0.0;
    cls[i] = pos ? labels[i] : 0;
    w_type[i] = pos ? lambda_type * inv : 0.0;
  }
  const Var det = nn::bce(graph.p_gunshot, y, w_det);
  const Var type = nn::cross_entropy_logits(graph.type_logits, cls, w_type);
  return nn::add(det, type);
}

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorCode::InvalidParam, "epochs must be >= 1");
  require(batch_size >= 1, ErrorCode::InvalidParam, "batch_size must be >= 1");
  require(lr > 0.0, ErrorCode::InvalidParam, "lr must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::InvalidParam, "momentum must be in [0, 1)");
  require(lambda_type >= 0.0, ErrorCode::InvalidParam, "lambda_type must be >= 0");
  require(input_frames >= 8, ErrorCode::InvalidParam, "input_frames must be >= 8");
}

double evaluate_loss(const JointCnnModel& model, const CnnDataset& data, double lambda_type) {
  require(!data.mels.empty(), ErrorCode::InsufficientData, "cannot evaluate loss on an empty set");
  return batched_loss(model, prepare_all(model, data), data.labels, lambda_type, 16);
}

TrainResult cnn_train(const CnnDataset& train, const CnnDataset& val, const TrainConfig& cfg,
                      const CheckpointHook& on_improve) {
  cfg.validate();
  require(!train.mels.empty(), ErrorCode::InsufficientData, "empty training set");
  require(train.mels.size() == train.labels.size() && val.mels.size() == val.labels.size(),
          ErrorCode::DimensionMismatch, "one label per example required");

  JointCnnModel model = JointCnnModel::init(splitmix64(cfg.seed), cfg.input_frames);
  {
    double sum = 0.0, sq = 0.0, n = 0.0;
    for (const auto& m : train.mels)
      for (double v : m.values()) {
        sum += v;
        sq += v * v;
        n += 1.0;
      }
    require(n > 0.0, ErrorCode::InsufficientData, "training mels are empty");
    model.input_mean = sum / n;
    model.input_std = std::sqrt(std::max(sq / n - model.input_mean * model.input_mean, 0.0));
    if (model.input_std < 1e-12) model.input_std = 1.0;
  }
  const auto train_in = prepare_all(model, train);
  const auto val_in = prepare_all(model, val);

  TrainResult result{model, {}};
  result.history.best_val_loss = std::numeric_limits<double>::infinity();
  auto params = model.parameters();
  nn::OptimizerState opt;
  const nn::SgdConfig sgd{cfg.lr, cfg.momentum};
  Rng shuffler(splitmix64(cfg.seed ^ 0x5eedULL));
  std::vector<std::size_t> order(train_in.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t since_best = 0;
  nn::Tape tape;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch_no = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const Matrix<double>*> ptrs;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        ptrs.push_back(&train_in[order[i]]);
        labels.push_back(train.labels[order[i]]);
      }
      try {
        tape.reset();
        nn::zero_grads(params);
        const auto graph = cnn_graph(tape, model, ptrs, true);
        const Var loss = joint_loss(graph, labels, cfg.lambda_type);
        tape.backward(loss);
        nn::sgd_step(params, opt, sgd);
        epoch_loss += loss.value().item() * static_cast<double>(end - start);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteValue) throw;
        fail(ErrorCode::NonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                           std::to_string(batch_no) + ": " + e.what());
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.val_loss = val_in.empty() ? rec.train_loss : batched_loss(model, val_in, val.labels, cfg.lambda_type, 16);
    require(std::isfinite(rec.train_loss) && std::isfinite(rec.val_loss), ErrorCode::NonFiniteLoss,
            "non-finite epoch loss at epoch " + std::to_string(epoch));
    rec.improved = rec.val_loss < result.history.best_val_loss;
    if (rec.improved) {
      result.history.best_val_loss = rec.val_loss;
      result.history.best_epoch = epoch;
      result.model = model;
      since_best = 0;
      if (on_improve) on_improve(result.model, rec);
    } else {
      ++since_best;
    }
    result.history.epochs.push_back(rec);
    if (since_best >= cfg.patience) break;
  }
  for (auto* p : result.model.parameters()) p->zero_grad();
  return result;
}

std::vector<Prediction> predict_dataset(const JointCnnModel& model, const std::vector<Matrix<double>>& mels,
                                        double threshold) {
  std::vector<Prediction> out;
  out.reserve(mels.size());
  for (const auto& m : mels) out.push_back(cnn_forward(model, m, threshold));
  return out;
}

}  // namespace gsb::models
