#pragma once

// On-disk capture format.
//
// Frame file (*.uavf), all integers little-endian:
//   0  char[4]  magic "UAVF"
//   4  u16      format version (kFrameFormatVersion)
//   6  u16      reserved, 0
//   8  f64      sample rate, Hz
//  16  i32      label kind: -1 none, 0 noise, 1 uav
//  20  i32      controller id (0 unless uav)
//  24  u64      sample count n
//  32  f32[n]   samples
//  ..  u32      CRC-32 (zlib polynomial) of every preceding byte
//
// A dataset is a directory holding the frame files plus dataset.json, a
// manifest listing every frame with its label, SNR and seed, the generator
// configuration and its hash.

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <zlib.h>

#include <json.hpp>

#include "uavrf/error.hpp"
#include "uavrf/generator.hpp"
#include "uavrf/signal.hpp"

namespace uavrf {

inline constexpr std::uint16_t kFrameFormatVersion = 1;
inline constexpr int kManifestVersion = 1;
inline constexpr char kManifestName[] = "dataset.json";

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return std::bit_cast<T>(bits);
}

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t len) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

constexpr std::size_t kHeaderSize = 32;

}  // namespace detail

inline std::vector<unsigned char> encode_frame(const SampledSignal& s) {
  validate(s);
  std::vector<unsigned char> buf;
  buf.reserve(detail::kHeaderSize + 4 * s.samples.size() + 4);
  for (char c : {'U', 'A', 'V', 'F'}) buf.push_back(static_cast<unsigned char>(c));
  detail::put_le<std::uint16_t>(buf, kFrameFormatVersion);
  detail::put_le<std::uint16_t>(buf, 0);
  detail::put_le<double>(buf, s.sample_rate);
  const std::int32_t kind = !s.label ? -1 : (s.label->is_uav() ? 1 : 0);
  detail::put_le<std::int32_t>(buf, kind);
  detail::put_le<std::int32_t>(buf, s.label ? s.label->controller_id : 0);
  detail::put_le<std::uint64_t>(buf, s.samples.size());
  for (float v : s.samples) detail::put_le<float>(buf, v);
  detail::put_le<std::uint32_t>(buf, detail::crc32_of(buf.data(), buf.size()));
  return buf;
}

inline SampledSignal decode_frame(const std::vector<unsigned char>& buf) {
  using detail::get_le;
  require(buf.size() >= detail::kHeaderSize + 4, ErrorCode::CorruptRecord, "frame shorter than its header");
  require(std::memcmp(buf.data(), "UAVF", 4) == 0, ErrorCode::CorruptRecord, "bad frame magic");
  const auto version = get_le<std::uint16_t>(buf.data() + 4);
  require(version == kFrameFormatVersion, ErrorCode::FormatVersionMismatch,
          "frame version " + std::to_string(version) + ", expected " + std::to_string(kFrameFormatVersion));
  const auto n = get_le<std::uint64_t>(buf.data() + 24);
  require(n <= (buf.size() - detail::kHeaderSize - 4) / 4 && buf.size() == detail::kHeaderSize + 4 * n + 4,
          ErrorCode::CorruptRecord, "frame length does not match its header");
  const auto stored = get_le<std::uint32_t>(buf.data() + buf.size() - 4);
  require(stored == detail::crc32_of(buf.data(), buf.size() - 4), ErrorCode::CorruptRecord, "checksum mismatch");

  SampledSignal s;
  s.sample_rate = get_le<double>(buf.data() + 8);
  const auto kind = get_le<std::int32_t>(buf.data() + 16);
  const auto id = get_le<std::int32_t>(buf.data() + 20);
  if (kind == 0) {
    s.label = ClassLabel::noise();
  } else if (kind == 1) {
    require(id >= 1, ErrorCode::CorruptRecord, "uav frame without controller id");
    s.label = ClassLabel::uav(id);
  } else {
    require(kind == -1, ErrorCode::CorruptRecord, "unknown label kind");
  }
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.samples[i] = get_le<float>(buf.data() + detail::kHeaderSize + 4 * i);
  return s;
}

inline void write_frame(const std::filesystem::path& path, const SampledSignal& s) {
  const auto buf = encode_frame(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path.string());
}

inline SampledSignal read_frame(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_frame(buf);
}

/// FNV-1a over a canonical JSON dump (object keys are sorted by nlohmann).
inline std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

struct FrameRecord {
  std::string file;
  ClassLabel label;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  int version = kManifestVersion;
  double sample_rate = 0.0;
  std::uint64_t seed = 0;
  std::optional<GeneratorConfig> generator;
  std::string config_hash;
  std::vector<FrameRecord> frames;

  /// Frame count per label: "noise" and the controller id as a string.
  std::map<std::string, int> class_counts() const {
    std::map<std::string, int> counts;
    for (const auto& f : frames) {
      ++counts[f.label.is_uav() ? std::to_string(f.label.controller_id) : std::string("noise")];
    }
    return counts;
  }
};

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : m.frames) {
    frames.push_back({{"file", f.file},
                      {"label", f.label.is_uav() ? "uav" : "noise"},
                      {"controller_id", f.label.controller_id},
                      {"snr_db", f.snr_db},
                      {"seed", f.seed}});
  }
  nlohmann::json j{{"format", "uavrf-dataset"},
                   {"version", m.version},
                   {"sample_rate", m.sample_rate},
                   {"seed", m.seed},
                   {"config_hash", m.config_hash},
                   {"class_counts", m.class_counts()},
                   {"frames", frames}};
  j["generator"] = m.generator ? nlohmann::json(*m.generator) : nlohmann::json(nullptr);
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", std::string{}) == "uavrf-dataset", ErrorCode::CorruptRecord,
            "not a dataset manifest");
    DatasetManifest m;
    m.version = j.at("version").get<int>();
    require(m.version == kManifestVersion, ErrorCode::FormatVersionMismatch,
            "manifest version " + std::to_string(m.version));
    m.sample_rate = j.at("sample_rate").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.value("config_hash", std::string{});
    if (j.contains("generator") && !j["generator"].is_null()) m.generator = j["generator"].get<GeneratorConfig>();
    for (const auto& f : j.at("frames")) {
      FrameRecord r;
      r.file = f.at("file").get<std::string>();
      r.label = f.at("label").get<std::string>() == "uav" ? ClassLabel::uav(f.at("controller_id").get<int>())
                                                          : ClassLabel::noise();
      r.snr_db = f.value("snr_db", 0.0);
      r.seed = f.value("seed", std::uint64_t{0});
      m.frames.push_back(std::move(r));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptRecord, std::string("malformed manifest: ") + e.what());
  }
}

/// Streams frames into a dataset directory; the manifest is written by finish().
class DatasetWriter {
 public:
  explicit DatasetWriter(std::filesystem::path dir, std::uint64_t seed = 0,
                         std::optional<GeneratorConfig> generator = std::nullopt)
      : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    require(!ec, ErrorCode::Io, "cannot create " + dir_.string() + ": " + ec.message());
    manifest_.seed = seed;
    manifest_.generator = std::move(generator);
    if (manifest_.generator) manifest_.config_hash = config_hash(nlohmann::json(*manifest_.generator));
  }

  void add(const SampledSignal& frame, double snr_db = 0.0, std::uint64_t seed = 0) {
    require(frame.label.has_value(), ErrorCode::InvalidArgument, "dataset frames must be labelled");
    if (manifest_.frames.empty()) manifest_.sample_rate = frame.sample_rate;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06zu.uavf", manifest_.frames.size());
    write_frame(dir_ / name, frame);
    manifest_.frames.push_back({name, *frame.label, snr_db, seed});
  }

  const DatasetManifest& finish() {
    std::ofstream out(dir_ / kManifestName, std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write manifest in " + dir_.string());
    out << to_json(manifest_).dump(1) << '\n';
    require(static_cast<bool>(out), ErrorCode::Io, "manifest write failed");
    return manifest_;
  }

 private:
  std::filesystem::path dir_;
  DatasetManifest manifest_;
};

/// Opened dataset directory; frames are read lazily.
class Dataset {
 public:
  static Dataset open(const std::filesystem::path& dir) {
    const auto path = dir / kManifestName;
    require(std::filesystem::exists(path), ErrorCode::NotFound, "dataset not found: " + dir.string());
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::CorruptRecord, std::string("manifest is not valid JSON: ") + e.what());
    }
    return Dataset(dir, manifest_from_json(j));
  }

  std::size_t size() const { return manifest_.frames.size(); }
  const DatasetManifest& manifest() const { return manifest_; }

  SampledSignal frame(std::size_t i) const {
    const auto& rec = manifest_.frames.at(i);
    SampledSignal s = read_frame(dir_ / rec.file);
    require(s.label && *s.label == rec.label, ErrorCode::CorruptRecord, "label mismatch for " + rec.file);
    return s;
  }

 private:
  Dataset(std::filesystem::path dir, DatasetManifest m) : dir_(std::move(dir)), manifest_(std::move(m)) {}
  std::filesystem::path dir_;
  DatasetManifest manifest_;
};

inline DatasetManifest save_dataset(const std::vector<SampledSignal>& frames, const std::filesystem::path& dir,
                                    std::uint64_t seed = 0, std::optional<GeneratorConfig> generator = std::nullopt) {
  DatasetWriter writer(dir, seed, std::move(generator));
  for (const auto& f : frames) writer.add(f);
  return writer.finish();
}

inline std::vector<SampledSignal> load_dataset(const std::filesystem::path& dir) {
  const Dataset ds = Dataset::open(dir);
  std::vector<SampledSignal> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(ds.frame(i));
  return out;
}

/// Seed of the i-th frame of a class; noise frames use class index 0.
inline std::uint64_t frame_seed(std::uint64_t master, const ClassLabel& label, std::size_t index) {
  return derive_seed(master, static_cast<std::uint64_t>(label.controller_id), index);
}

/// Generates `per_class` frames for every controller plus `noise_frames`
/// noise captures and writes them to `dir`.
inline DatasetManifest generate_dataset(const GeneratorConfig& cfg, int per_class, int noise_frames, double snr_db,
                                        const std::filesystem::path& dir) {
  validate(cfg);
  require(per_class >= 0 && noise_frames >= 0, ErrorCode::BadConfig, "frame counts must be >= 0");
  DatasetWriter writer(dir, cfg.rng_seed, cfg);
  for (int c = 1; c <= cfg.n_classes; ++c) {
    const auto label = ClassLabel::uav(c);
    for (int i = 0; i < per_class; ++i) {
      const auto seed = frame_seed(cfg.rng_seed, label, static_cast<std::size_t>(i));
      std::mt19937_64 rng(seed);
      writer.add(generate_frame(cfg, label, snr_db, rng), snr_db, seed);
    }
  }
  for (int i = 0; i < noise_frames; ++i) {
    const auto seed = frame_seed(cfg.rng_seed, ClassLabel::noise(), static_cast<std::size_t>(i));
    std::mt19937_64 rng(seed);
    writer.add(generate_frame(cfg, ClassLabel::noise(), snr_db, rng), snr_db, seed);
  }
  return writer.finish();
}

}  // namespace uavrf
