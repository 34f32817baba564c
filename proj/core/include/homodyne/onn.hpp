#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homodyne/backend.hpp"
#include "homodyne/tensor.hpp"

namespace homodyne {

inline constexpr std::size_t kMnistPixels = 784;  // 28 x 28
inline constexpr std::size_t kMnistClasses = 10;
inline constexpr std::size_t kHiddenUnits = 12;

/// A loaded MNIST split.  Pixels stay in their 8-bit form; image() scales to
/// [0, 1] on access.
struct MnistSet {
  std::size_t count = 0;
  std::vector<std::uint8_t> pixels;  // count * 784, row-major
  std::vector<std::uint8_t> labels;  // count entries, values 0-9
  std::string tag;

  std::vector<double> image(std::size_t i) const;
  int label(std::size_t i) const { return labels.at(i); }
};

/// Reads the standard IDX pair (images magic 0x00000803, labels 0x00000801,
/// big-endian dimensions).  Throws std::runtime_error with distinct messages
/// for bad magic, truncation, and image/label count mismatch.
MnistSet load_mnist_idx(const std::string& images_path,
                        const std::string& labels_path);

/// Convenience: loads "train-*" or "t10k-*" file pairs from a directory.
MnistSet load_mnist_split(const std::string& dir, bool train);

/// Writes a set back out in IDX form (fixture/round-trip support).
void save_mnist_idx(const std::string& images_path,
                    const std::string& labels_path, const MnistSet& set);

/// Two complex layers, no bias, no inter-layer nonlinearity; class scores are
/// the magnitudes of the 10 layer-2 outputs.
struct ComplexMLP {
  ComplexMatrix layer1{kMnistPixels, kHiddenUnits};
  ComplexMatrix layer2{kHiddenUnits, kMnistClasses};
  double digital_accuracy = 0.0;
};

/// One real layer; class scores are the raw outputs (imaginary parts of the
/// stored matrix are zero by construction).
struct RealSingleLayer {
  ComplexMatrix weights{kMnistPixels, kMnistClasses};
  double digital_accuracy = 0.0;
};

/// Class scores for one image (784 reals in [0, 1]); both layer products go
/// through `backend`.  Throws on shape mismatch.
std::vector<double> forward_complex(const ComplexMLP& net,
                                    const std::vector<double>& image,
                                    MvmBackend& backend);

std::vector<double> forward_real(const RealSingleLayer& net,
                                 const std::vector<double>& image,
                                 MvmBackend& backend);

/// argmax with deterministic tie-break to the lowest class index.
int classify_complex(const ComplexMLP& net, const std::vector<double>& image,
                     MvmBackend& backend);
int classify_real(const RealSingleLayer& net, const std::vector<double>& image,
                  MvmBackend& backend);

struct EvalReport {
  double accuracy = 0.0;
  /// 10x10 row-normalized confusion matrix, row-major; rows are true labels.
  std::vector<double> confusion;
  std::vector<int> predictions;
};

EvalReport accuracy_and_confusion(const std::vector<int>& predictions,
                                  const std::vector<int>& labels);

/// Deterministic sample of `count` distinct indices out of [0, total).
std::vector<std::size_t> select_subset(std::size_t total, std::size_t count,
                                       std::uint64_t seed);

/// Inference over a set of images.  cfg == nullptr runs the exact digital
/// backend; otherwise each image gets a fresh analog backend whose noise
/// stream derives from (cfg->seed, image index), so results are independent
/// of evaluation order.
EvalReport evaluate_complex(const ComplexMLP& net, const MnistSet& set,
                            const std::vector<std::size_t>& indices,
                            const EmulatorConfig* cfg);
EvalReport evaluate_real(const RealSingleLayer& net, const MnistSet& set,
                         const std::vector<std::size_t>& indices,
                         const EmulatorConfig* cfg);

/// Digital reference training (Adam on softmax cross-entropy; for the complex
/// net the real and imaginary parts are independent real parameters and the
/// loss reads the magnitude scores).  Deterministic for a fixed seed.  Throws
/// std::runtime_error naming the achieved accuracy when the test-set target
/// is missed.
struct TrainOptions {
  std::size_t epochs = 12;
  std::size_t batch = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double target_accuracy = 0.94;
};

ComplexMLP train_complex_mlp(const MnistSet& train, const MnistSet& test,
                             const TrainOptions& opts);
RealSingleLayer train_real_single_layer(const MnistSet& train,
                                        const MnistSet& test,
                                        const TrainOptions& opts);

/// Weight files: "HOWT" v1 header (magic, version, kind, shapes, stored
/// digital accuracy) followed by little-endian double payload.
void save_complex_mlp(const std::string& path, const ComplexMLP& net);
ComplexMLP load_complex_mlp(const std::string& path);
void save_real_single_layer(const std::string& path,
                            const RealSingleLayer& net);
RealSingleLayer load_real_single_layer(const std::string& path);

}  // namespace homodyne
