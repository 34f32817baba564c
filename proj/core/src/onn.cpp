#include "homodyne/onn.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "homodyne/emulator.hpp"
#include "homodyne/rng.hpp"

namespace homodyne {
namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw std::runtime_error("IDX file truncated: " + path);
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::vector<std::uint8_t> read_bytes(std::istream& in, std::size_t n,
                                     const std::string& path) {
  std::vector<std::uint8_t> out(n);
  if (n > 0 && !in.read(reinterpret_cast<char*>(out.data()),
                        static_cast<std::streamsize>(n))) {
    throw std::runtime_error("IDX file truncated: " + path);
  }
  return out;
}

int argmax_lowest(const std::vector<double>& scores) {
  // std::max_element keeps the first of equal maxima, which is exactly the
  // required lowest-class tie-break.
  return static_cast<int>(std::distance(
      scores.begin(), std::max_element(scores.begin(), scores.end())));
}

ComplexMatrix transpose(const ComplexMatrix& m) {
  ComplexMatrix t(m.cols, m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      t(c, r) = m(r, c);
    }
  }
  return t;
}

ComplexVector to_complex(const std::vector<double>& v) {
  ComplexVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = cplx(v[i], 0.0);
  return out;
}

template <typename Forward>
EvalReport evaluate_generic(const MnistSet& set,
                            const std::vector<std::size_t>& indices,
                            const EmulatorConfig* cfg, Forward&& forward) {
  std::vector<int> predictions;
  std::vector<int> labels;
  predictions.reserve(indices.size());
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= set.count) {
      throw std::out_of_range("evaluate: image index out of range");
    }
    const std::vector<double> img = set.image(i);
    if (cfg == nullptr) {
      ExactBackend backend;
      predictions.push_back(argmax_lowest(forward(img, backend)));
    } else {
      EmulatorConfig per_image = *cfg;
      per_image.seed = derive_seed(cfg->seed, static_cast<std::uint64_t>(i));
      AnalogBackend backend(per_image);
      predictions.push_back(argmax_lowest(forward(img, backend)));
    }
    labels.push_back(set.label(i));
  }
  return accuracy_and_confusion(predictions, labels);
}

void write_doubles(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& in, double* data, std::size_t n,
                  const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(data),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    throw std::runtime_error("weight file truncated: " + path);
  }
}

constexpr char kWeightsMagic[4] = {'H', 'O', 'W', 'T'};
constexpr std::uint32_t kWeightsVersion = 1;
constexpr std::uint32_t kKindComplexMlp = 1;
constexpr std::uint32_t kKindRealSingle = 2;

void write_weights_header(std::ostream& out, std::uint32_t kind,
                          double accuracy) {
  out.write(kWeightsMagic, 4);
  out.write(reinterpret_cast<const char*>(&kWeightsVersion),
            sizeof(kWeightsVersion));
  out.write(reinterpret_cast<const char*>(&kind), sizeof(kind));
  out.write(reinterpret_cast<const char*>(&accuracy), sizeof(accuracy));
}

std::uint32_t read_weights_header(std::istream& in, const std::string& path,
                                  double* accuracy) {
  char magic[4];
  if (!in.read(magic, 4)) {
    throw std::runtime_error("weight file truncated: " + path);
  }
  if (std::memcmp(magic, kWeightsMagic, 4) != 0) {
    throw std::runtime_error("weight file has bad magic: " + path);
  }
  std::uint32_t version = 0;
  std::uint32_t kind = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)) ||
      !in.read(reinterpret_cast<char*>(&kind), sizeof(kind)) ||
      !in.read(reinterpret_cast<char*>(accuracy), sizeof(double))) {
    throw std::runtime_error("weight file truncated: " + path);
  }
  if (version != kWeightsVersion) {
    throw std::runtime_error("weight file has unsupported version " +
                             std::to_string(version) + ": " + path);
  }
  return kind;
}

void write_matrix_dims(std::ostream& out, const ComplexMatrix& m) {
  const std::uint64_t rows = m.rows;
  const std::uint64_t cols = m.cols;
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
}

ComplexMatrix read_matrix(std::istream& in, const std::string& path) {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  if (!in.read(reinterpret_cast<char*>(&rows), sizeof(rows)) ||
      !in.read(reinterpret_cast<char*>(&cols), sizeof(cols))) {
    throw std::runtime_error("weight file truncated: " + path);
  }
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
    throw std::runtime_error("weight file has implausible dimensions: " + path);
  }
  ComplexMatrix m(static_cast<std::size_t>(rows),
                  static_cast<std::size_t>(cols));
  std::vector<double> plane(m.rows * m.cols);
  read_doubles(in, plane.data(), plane.size(), path);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    m.data[i] = cplx(plane[i], 0.0);
  }
  read_doubles(in, plane.data(), plane.size(), path);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    m.data[i] = cplx(m.data[i].real(), plane[i]);
  }
  return m;
}

void write_matrix(std::ostream& out, const ComplexMatrix& m) {
  write_matrix_dims(out, m);
  std::vector<double> plane(m.rows * m.cols);
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = m.data[i].real();
  write_doubles(out, plane.data(), plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = m.data[i].imag();
  write_doubles(out, plane.data(), plane.size());
}

}  // namespace

std::vector<double> MnistSet::image(std::size_t i) const {
  if (i >= count) throw std::out_of_range("MnistSet::image index");
  std::vector<double> out(kMnistPixels);
  const std::uint8_t* base = pixels.data() + i * kMnistPixels;
  for (std::size_t p = 0; p < kMnistPixels; ++p) {
    out[p] = static_cast<double>(base[p]) / 255.0;
  }
  return out;
}

MnistSet load_mnist_idx(const std::string& images_path,
                        const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) {
    throw std::runtime_error("cannot open IDX file: " + images_path);
  }
  if (const std::uint32_t magic = read_u32_be(img, images_path);
      magic != kImagesMagic) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw std::runtime_error("IDX image file has bad magic " +
                             std::string(buf) + ": " + images_path);
  }
  const std::uint32_t n_images = read_u32_be(img, images_path);
  const std::uint32_t rows = read_u32_be(img, images_path);
  const std::uint32_t cols = read_u32_be(img, images_path);
  if (rows != 28 || cols != 28) {
    throw std::runtime_error("IDX image file is not 28x28: " + images_path);
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) {
    throw std::runtime_error("cannot open IDX file: " + labels_path);
  }
  if (const std::uint32_t magic = read_u32_be(lab, labels_path);
      magic != kLabelsMagic) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw std::runtime_error("IDX label file has bad magic " +
                             std::string(buf) + ": " + labels_path);
  }
  const std::uint32_t n_labels = read_u32_be(lab, labels_path);
  if (n_images != n_labels) {
    throw std::runtime_error(
        "IDX image/label count mismatch: " + std::to_string(n_images) +
        " images vs " + std::to_string(n_labels) + " labels");
  }

  MnistSet set;
  set.count = n_images;
  set.pixels = read_bytes(img, std::size_t(n_images) * kMnistPixels,
                          images_path);
  set.labels = read_bytes(lab, n_labels, labels_path);
  for (std::uint8_t l : set.labels) {
    if (l > 9) {
      throw std::runtime_error("IDX label out of range in " + labels_path);
    }
  }
  return set;
}

MnistSet load_mnist_split(const std::string& dir, bool train) {
  const std::string stem = train ? "train" : "t10k";
  MnistSet set = load_mnist_idx(dir + "/" + stem + "-images-idx3-ubyte",
                                dir + "/" + stem + "-labels-idx1-ubyte");
  set.tag = train ? "train" : "test";
  return set;
}

void save_mnist_idx(const std::string& images_path,
                    const std::string& labels_path, const MnistSet& set) {
  if (set.pixels.size() != set.count * kMnistPixels ||
      set.labels.size() != set.count) {
    throw std::invalid_argument("save_mnist_idx: inconsistent set sizes");
  }
  std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
  if (!img) {
    throw std::runtime_error("cannot write IDX file: " + images_path);
  }
  write_u32_be(img, kImagesMagic);
  write_u32_be(img, static_cast<std::uint32_t>(set.count));
  write_u32_be(img, 28);
  write_u32_be(img, 28);
  img.write(reinterpret_cast<const char*>(set.pixels.data()),
            static_cast<std::streamsize>(set.pixels.size()));
  if (!img) throw std::runtime_error("write failed: " + images_path);

  std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
  if (!lab) {
    throw std::runtime_error("cannot write IDX file: " + labels_path);
  }
  write_u32_be(lab, kLabelsMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(set.count));
  lab.write(reinterpret_cast<const char*>(set.labels.data()),
            static_cast<std::streamsize>(set.labels.size()));
  if (!lab) throw std::runtime_error("write failed: " + labels_path);
}

std::vector<double> forward_complex(const ComplexMLP& net,
                                    const std::vector<double>& image,
                                    MvmBackend& backend) {
  if (image.size() != net.layer1.rows) {
    throw std::invalid_argument("forward_complex: image length mismatch");
  }
  if (net.layer1.cols != net.layer2.rows) {
    throw std::invalid_argument("forward_complex: layer shape mismatch");
  }
  const ComplexVector hidden =
      backend.multiply(transpose(net.layer1), to_complex(image));
  const ComplexVector out = backend.multiply(transpose(net.layer2), hidden);
  std::vector<double> scores(out.size());
  for (std::size_t c = 0; c < out.size(); ++c) scores[c] = std::abs(out[c]);
  return scores;
}

std::vector<double> forward_real(const RealSingleLayer& net,
                                 const std::vector<double>& image,
                                 MvmBackend& backend) {
  if (image.size() != net.weights.rows) {
    throw std::invalid_argument("forward_real: image length mismatch");
  }
  const ComplexVector out =
      backend.multiply(transpose(net.weights), to_complex(image));
  std::vector<double> scores(out.size());
  for (std::size_t c = 0; c < out.size(); ++c) scores[c] = out[c].real();
  return scores;
}

int classify_complex(const ComplexMLP& net, const std::vector<double>& image,
                     MvmBackend& backend) {
  return argmax_lowest(forward_complex(net, image, backend));
}

int classify_real(const RealSingleLayer& net, const std::vector<double>& image,
                  MvmBackend& backend) {
  return argmax_lowest(forward_real(net, image, backend));
}

EvalReport accuracy_and_confusion(const std::vector<int>& predictions,
                                  const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    throw std::invalid_argument(
        "accuracy_and_confusion: prediction/label size mismatch or empty");
  }
  EvalReport report;
  report.predictions = predictions;
  report.confusion.assign(kMnistClasses * kMnistClasses, 0.0);
  std::vector<std::size_t> row_counts(kMnistClasses, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int t = labels[i];
    const int p = predictions[i];
    if (t < 0 || t >= int(kMnistClasses) || p < 0 || p >= int(kMnistClasses)) {
      throw std::invalid_argument("accuracy_and_confusion: class out of range");
    }
    report.confusion[std::size_t(t) * kMnistClasses + std::size_t(p)] += 1.0;
    ++row_counts[std::size_t(t)];
    if (t == p) ++correct;
  }
  for (std::size_t r = 0; r < kMnistClasses; ++r) {
    if (row_counts[r] == 0) continue;
    for (std::size_t c = 0; c < kMnistClasses; ++c) {
      report.confusion[r * kMnistClasses + c] /=
          static_cast<double>(row_counts[r]);
    }
  }
  report.accuracy =
      static_cast<double>(correct) / static_cast<double>(predictions.size());
  return report;
}

std::vector<std::size_t> select_subset(std::size_t total, std::size_t count,
                                       std::uint64_t seed) {
  if (count > total) {
    throw std::invalid_argument("select_subset: count exceeds total");
  }
  std::vector<std::size_t> indices(total);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  auto rng = make_rng(seed, 0x5e1ec7ULL);
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(count);
  std::sort(indices.begin(), indices.end());
  return indices;
}

EvalReport evaluate_complex(const ComplexMLP& net, const MnistSet& set,
                            const std::vector<std::size_t>& indices,
                            const EmulatorConfig* cfg) {
  return evaluate_generic(set, indices, cfg,
                          [&](const std::vector<double>& img, MvmBackend& b) {
                            return forward_complex(net, img, b);
                          });
}

EvalReport evaluate_real(const RealSingleLayer& net, const MnistSet& set,
                         const std::vector<std::size_t>& indices,
                         const EmulatorConfig* cfg) {
  return evaluate_generic(set, indices, cfg,
                          [&](const std::vector<double>& img, MvmBackend& b) {
                            return forward_real(net, img, b);
                          });
}

void save_complex_mlp(const std::string& path, const ComplexMLP& net) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write weight file: " + path);
  write_weights_header(out, kKindComplexMlp, net.digital_accuracy);
  write_matrix(out, net.layer1);
  write_matrix(out, net.layer2);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ComplexMLP load_complex_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  ComplexMLP net;
  const std::uint32_t kind = read_weights_header(in, path,
                                                 &net.digital_accuracy);
  if (kind != kKindComplexMlp) {
    throw std::runtime_error("weight file is not a complex MLP: " + path);
  }
  net.layer1 = read_matrix(in, path);
  net.layer2 = read_matrix(in, path);
  if (net.layer1.rows != kMnistPixels ||
      net.layer1.cols != net.layer2.rows ||
      net.layer2.cols != kMnistClasses) {
    throw std::runtime_error("weight file has unexpected layer shapes: " +
                             path);
  }
  return net;
}

void save_real_single_layer(const std::string& path,
                            const RealSingleLayer& net) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write weight file: " + path);
  write_weights_header(out, kKindRealSingle, net.digital_accuracy);
  write_matrix(out, net.weights);
  if (!out) throw std::runtime_error("write failed: " + path);
}

RealSingleLayer load_real_single_layer(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  RealSingleLayer net;
  const std::uint32_t kind = read_weights_header(in, path,
                                                 &net.digital_accuracy);
  if (kind != kKindRealSingle) {
    throw std::runtime_error("weight file is not a real single layer: " +
                             path);
  }
  net.weights = read_matrix(in, path);
  if (net.weights.rows != kMnistPixels ||
      net.weights.cols != kMnistClasses) {
    throw std::runtime_error("weight file has unexpected layer shapes: " +
                             path);
  }
  return net;
}

}  // namespace homodyne
