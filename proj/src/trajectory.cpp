#include "rco/trajectory.hpp"

#include "rco/errors.hpp"
#include "rco/json_io.hpp"
#include "rco/losses.hpp"
#include "rco/rng.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

namespace rco {

const Checkpoint& Trajectory::at_epoch(int epoch) const {
  for (const Checkpoint& c : checkpoints) {
    if (c.epoch == epoch) return c;
  }
  fail(errc::missing_input, "trajectory has no checkpoint at epoch " + std::to_string(epoch));
}

bool Trajectory::has_epoch(int epoch) const {
  for (const Checkpoint& c : checkpoints) {
    if (c.epoch == epoch) return true;
  }
  return false;
}

Trajectory train_teacher(const NetworkSpec& spec, const TeacherTrainConfig& cfg,
                         const Dataset& train, int capture_every) {
  validate_network(spec);
  validate(cfg.sgd);
  if (cfg.epochs < 1) fail(errc::config_invalid, "teacher epochs must be >= 1");
  if (cfg.sgd.schedule.total_epochs != cfg.epochs) {
    fail(errc::config_invalid, "schedule covers " +
                                   std::to_string(cfg.sgd.schedule.total_epochs) +
                                   " epochs, training asks for " + std::to_string(cfg.epochs));
  }
  if (capture_every < 1) fail(errc::config_invalid, "capture_every must be >= 1");
  if (train.n() == 0) fail(errc::invalid_argument, "teacher training set is empty");

  Trajectory t;
  t.spec = spec;
  t.config = cfg;
  t.capture_every = capture_every;
  t.iteration_mode = cfg.capture_per_iteration;

  const uint64_t digest = spec_digest(spec);
  Params params = init_params(spec, cfg.seed);
  Params velocity = zeros_like(params);

  long step = 0;
  const long batches_per_epoch =
      (train.n() + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = static_cast<long>(cfg.epochs) * batches_per_epoch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr = lr_at(cfg.sgd.schedule, epoch);
    BatchIter iter(train, cfg.batch_size, derive_seed(cfg.seed, seed_stream::batch,
                                                      static_cast<uint64_t>(epoch)));
    Batch batch;
    double loss_sum = 0.0;
    while (iter.next(batch)) {
      Activations acts = forward_cached(spec, params, batch.images);
      LossGrad lg = ce_loss(acts.logits().mat2d(), batch.labels);
      Tensor grad_t = Tensor::zeros(acts.logits().shape);
      MatMap(grad_t.data.data(), lg.logit_grad.rows(), lg.logit_grad.cols()) = lg.logit_grad;
      Params grads = backward_from(spec, params, acts, grad_t, Tensor{});
      sgd_step_inplace(params, velocity, grads, cfg.sgd, lr);
      loss_sum += static_cast<double>(lg.loss) * static_cast<double>(batch.labels.size());
      ++step;
      if (cfg.capture_per_iteration &&
          (step % capture_every == 0 || step == total_steps)) {
        Checkpoint c;
        c.epoch = static_cast<int>(step);
        c.params = params;
        c.lr_at_capture = lr;
        c.train_loss = lg.loss;
        c.spec_hash = digest;
        c.seed = cfg.seed;
        t.checkpoints.push_back(std::move(c));
      }
    }
    if (!cfg.capture_per_iteration) {
      const int completed = epoch + 1;
      if (completed % capture_every == 0 || completed == cfg.epochs) {
        Checkpoint c;
        c.epoch = completed;
        c.params = params;
        c.lr_at_capture = lr;
        c.train_loss = static_cast<float>(loss_sum / static_cast<double>(train.n()));
        c.spec_hash = digest;
        c.seed = cfg.seed;
        t.checkpoints.push_back(std::move(c));
      }
    }
  }
  return t;
}

// --- checkpoint persistence --------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'C', 'O', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  put_u32(b, static_cast<uint32_t>(v));
  put_u32(b, static_cast<uint32_t>(v >> 32));
}

void put_f32(std::vector<uint8_t>& b, float v) { put_u32(b, std::bit_cast<uint32_t>(v)); }

void put_tensor(std::vector<uint8_t>& b, const Tensor& t) {
  put_u32(b, static_cast<uint32_t>(t.shape.size()));
  for (int d : t.shape) put_u32(b, static_cast<uint32_t>(d));
  for (float v : t.data) put_f32(b, v);
}

struct Reader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;
  const std::string& path;

  void need(size_t n) {
    if (pos + n > bytes.size()) {
      fail(errc::truncated, path + ": needs " + std::to_string(pos + n) + " bytes, has " +
                                std::to_string(bytes.size()));
    }
  }
  uint32_t u32() {
    need(4);
    uint32_t v = static_cast<uint32_t>(bytes[pos]) | (static_cast<uint32_t>(bytes[pos + 1]) << 8) |
                 (static_cast<uint32_t>(bytes[pos + 2]) << 16) |
                 (static_cast<uint32_t>(bytes[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    uint64_t lo = u32();
    return lo | (static_cast<uint64_t>(u32()) << 32);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  Tensor tensor() {
    uint32_t ndim = u32();
    if (ndim == 0) return Tensor{};
    if (ndim > 8) fail(errc::bad_format, path + ": tensor rank " + std::to_string(ndim));
    std::vector<int> shape(ndim);
    int64_t count = 1;
    for (uint32_t i = 0; i < ndim; ++i) {
      shape[i] = static_cast<int>(u32());
      if (shape[i] < 1) fail(errc::bad_format, path + ": nonpositive tensor dimension");
      count *= shape[i];
    }
    Tensor t = Tensor::zeros(std::move(shape));
    need(static_cast<size_t>(count) * 4);
    for (int64_t i = 0; i < count; ++i) t.data[static_cast<size_t>(i)] = f32();
    return t;
  }
};

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_failure, "cannot open " + path);
  in.seekg(0, std::ios::end);
  std::streamoff len = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<uint8_t> bytes(static_cast<size_t>(len));
  if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
  if (!in) fail(errc::io_failure, "read failed for " + path);
  return bytes;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::vector<uint8_t> b;
  b.insert(b.end(), kMagic, kMagic + 8);
  put_u32(b, kVersion);
  put_u64(b, c.spec_hash);
  put_u32(b, static_cast<uint32_t>(c.epoch));
  put_f32(b, c.lr_at_capture);
  put_f32(b, c.train_loss);
  put_u64(b, c.seed);
  put_u32(b, static_cast<uint32_t>(c.params.weights.size()));
  for (size_t i = 0; i < c.params.weights.size(); ++i) {
    put_tensor(b, c.params.weights[i]);
    put_tensor(b, c.params.biases[i]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::io_failure, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) fail(errc::io_failure, "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::vector<uint8_t> bytes = slurp(path);
  Reader r{bytes, 0, path};
  r.need(8);
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) {
    fail(errc::bad_format, path + ": not a checkpoint file (bad magic)");
  }
  r.pos = 8;
  uint32_t version = r.u32();
  if (version != kVersion) {
    fail(errc::version_mismatch, path + ": format version " + std::to_string(version) +
                                     ", expected " + std::to_string(kVersion));
  }
  Checkpoint c;
  c.spec_hash = r.u64();
  c.epoch = static_cast<int>(r.u32());
  c.lr_at_capture = r.f32();
  c.train_loss = r.f32();
  c.seed = r.u64();
  uint32_t layers = r.u32();
  if (layers > 1024) fail(errc::bad_format, path + ": implausible layer count");
  c.params.weights.reserve(layers);
  c.params.biases.reserve(layers);
  for (uint32_t i = 0; i < layers; ++i) {
    c.params.weights.push_back(r.tensor());
    c.params.biases.push_back(r.tensor());
  }
  if (r.pos != bytes.size()) fail(errc::bad_format, path + ": trailing bytes");
  return c;
}

Checkpoint load_checkpoint(const std::string& path, uint64_t expected_spec_hash) {
  Checkpoint c = load_checkpoint(path);
  if (c.spec_hash != expected_spec_hash) {
    fail(errc::digest_mismatch, path + ": checkpoint was built for a different network spec");
  }
  return c;
}

void save_trajectory(const Trajectory& t, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["spec"] = t.spec;
  manifest["spec_digest"] = spec_digest(t.spec);
  manifest["capture_every"] = t.capture_every;
  manifest["iteration_mode"] = t.iteration_mode;
  manifest["config"] = {
      {"epochs", t.config.epochs},
      {"batch_size", t.config.batch_size},
      {"seed", t.config.seed},
      {"capture_per_iteration", t.config.capture_per_iteration},
      {"sgd", t.config.sgd},
  };
  nlohmann::json list = nlohmann::json::array();
  for (const Checkpoint& c : t.checkpoints) {
    std::string name = "ckpt_" + std::to_string(c.epoch) + ".bin";
    save_checkpoint(c, dir + "/" + name);
    list.push_back({{"epoch", c.epoch}, {"file", name}});
  }
  manifest["checkpoints"] = list;
  write_json_file(manifest, dir + "/manifest.json");
}

Trajectory load_trajectory(const std::string& dir) {
  nlohmann::json manifest = read_json_file(dir + "/manifest.json");
  Trajectory t;
  try {
    t.spec = manifest.at("spec").get<NetworkSpec>();
    t.capture_every = manifest.at("capture_every").get<int>();
    t.iteration_mode = manifest.at("iteration_mode").get<bool>();
    const nlohmann::json& cfg = manifest.at("config");
    t.config.epochs = cfg.at("epochs").get<int>();
    t.config.batch_size = cfg.at("batch_size").get<int>();
    t.config.seed = cfg.at("seed").get<uint64_t>();
    t.config.capture_per_iteration = cfg.at("capture_per_iteration").get<bool>();
    t.config.sgd = cfg.at("sgd").get<SgdConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(errc::bad_format, dir + "/manifest.json: " + e.what());
  }
  const uint64_t digest = spec_digest(t.spec);
  if (manifest.at("spec_digest").get<uint64_t>() != digest) {
    fail(errc::digest_mismatch, dir + "/manifest.json: spec digest mismatch");
  }
  int prev = 0;
  for (const nlohmann::json& entry : manifest.at("checkpoints")) {
    std::string file = entry.at("file").get<std::string>();
    Checkpoint c = load_checkpoint(dir + "/" + file, digest);
    if (c.epoch != entry.at("epoch").get<int>()) {
      fail(errc::bad_format, file + ": epoch disagrees with manifest");
    }
    if (c.epoch <= prev) fail(errc::bad_format, dir + ": checkpoint epochs not increasing");
    prev = c.epoch;
    t.checkpoints.push_back(std::move(c));
  }
  if (t.checkpoints.empty()) fail(errc::missing_input, dir + ": trajectory has no checkpoints");
  return t;
}

}  // namespace rco
