#pragma once

#include "gsb/labels.hpp"
#include "gsb/matrix.hpp"
#include "gsb/nn/checkpoint.hpp"
#include "gsb/nn/ops.hpp"
#include "gsb/nn/optim.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gsb::models {

inline constexpr std::size_t kDefaultInputFrames = 128;
inline constexpr std::size_t kInputMels = 128;

/// Shared conv trunk (3x3 convs 1->16->32->64, each followed by relu and 2x2
/// max pooling, then a maximum over time into 64 channels x 16 mel bins)
/// feeding a detection head (1024->32->1, sigmoid) and a type head
/// (1024->32->5, softmax).
struct JointCnnModel {
  nn::Parameter conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b;
  nn::Parameter det1_w, det1_b, det2_w, det2_b;
  nn::Parameter type1_w, type1_b, type2_w, type2_b;
  // Scalar log-mel standardisation fitted on the training set.
  double input_mean = 0.0;
  double input_std = 1.0;
  std::size_t input_frames = kDefaultInputFrames;

  /// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  static JointCnnModel init(std::uint64_t seed, std::size_t input_frames = kDefaultInputFrames);

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  std::vector<nn::NamedTensor> tensors() const;
  static JointCnnModel from_tensors(const std::vector<nn::NamedTensor>& tensors);
  /// FNV-1a over every parameter value and the input statistics.
  std::uint64_t checksum() const;
};

/// Stable description of the topology; its hash goes into checkpoint metadata.
std::string cnn_architecture();

struct Prediction {
  double p_gunshot = 0.0;
  std::array<double, kNumClasses> type_posteriors{};
  bool detected = false;
  int decided_class = -1;  // argmax type when detected, else -1

  std::size_t argmax_type() const;
};

/// Center-crops or zero-pads the time axis to `frames` rows, after scalar
/// standardisation, so padding sits at the training mean.
Matrix<double> prepare_input(const Matrix<double>& mel, double mean, double std, std::size_t frames);

struct CnnGraph {
  nn::Var p_gunshot;    // [B,1] after sigmoid
  nn::Var type_logits;  // [B,5]
  nn::Var trunk;        // [B,1024] shared features
};

/// Builds the forward graph on `tape`. `inputs` holds prepared [frames x 128]
/// matrices. With trainable = false parameters enter as constants.
CnnGraph cnn_graph(nn::Tape& tape, JointCnnModel& model, std::span<const Matrix<double>* const> inputs,
                   bool trainable);

/// Single-clip inference on a raw log-mel matrix (any frame count).
Prediction cnn_forward(const JointCnnModel& model, const Matrix<double>& mel, double threshold = 0.5);

/// bce(p, y_det) + lambda * CE(type, y_type) * [y_det == gunshot], computed
/// from a finished prediction. `type_label` is ignored for negatives.
double joint_loss(const Prediction& pred, bool is_gunshot, int type_label, double lambda_type);

/// Batch-mean joint loss on the tape. labels[i] is a class index or -1.
nn::Var joint_loss(const CnnGraph& graph, std::span<const int> labels, double lambda_type);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double momentum = 0.9;
  double lambda_type = 1.0;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  std::size_t input_frames = kDefaultInputFrames;

  void validate() const;
};

struct CnnDataset {
  std::vector<Matrix<double>> mels;  // raw log-mel, frames x 128
  std::vector<int> labels;           // class index or -1 for no-gunshot
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

struct TrainResult {
  JointCnnModel model;  // best-validation parameters
  TrainHistory history;
};

/// Called with the new best model after each improving epoch.
using CheckpointHook = std::function<void(const JointCnnModel&, const EpochRecord&)>;

/// Minibatch SGD with momentum and early stopping on validation joint loss.
/// Throws NonFiniteLoss (with epoch and batch) if the loss or any gradient
/// becomes NaN/Inf.
TrainResult cnn_train(const CnnDataset& train, const CnnDataset& val, const TrainConfig& cfg,
                      const CheckpointHook& on_improve = {});

/// Mean joint loss of `model` over `data` without recording gradients.
double evaluate_loss(const JointCnnModel& model, const CnnDataset& data, double lambda_type);

/// One prediction per mel, in input order.
std::vector<Prediction> predict_dataset(const JointCnnModel& model, const std::vector<Matrix<double>>& mels,
                                        double threshold = 0.5);

}  // namespace gsb::models
