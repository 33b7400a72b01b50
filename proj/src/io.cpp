#include "palg/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "palg/error.hpp"

namespace palg {

using nlohmann::json;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::size_t offset() const noexcept { return pos_; }

  void need(std::size_t n, std::string_view field) const {
    if (bytes_.size() - pos_ < n) {
      std::ostringstream msg;
      msg << what_ << ": truncated at byte " << pos_ << " reading " << field << ": expected " << n
          << " bytes, found " << bytes_.size() - pos_;
      fail(ErrorKind::Format, msg.str());
    }
  }

  void magic(std::string_view expected) {
    need(expected.size(), "magic");
    if (std::memcmp(bytes_.data() + pos_, expected.data(), expected.size()) != 0)
      fail(ErrorKind::Format, what_ + ": bad magic at byte 0, expected '" + std::string(expected) + "'");
    pos_ += expected.size();
  }

  std::uint32_t u32(std::string_view field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(std::string_view field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return v;
  }

  std::string text(std::size_t n, std::string_view field) {
    need(n, field);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      std::ostringstream msg;
      msg << what_ << ": " << bytes_.size() - pos_ << " trailing bytes at byte " << pos_;
      fail(ErrorKind::Format, msg.str());
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::vector<std::uint8_t> encode_embeddings(const Matrix& m) {
  std::vector<std::uint8_t> out{'P', 'A', 'L', 'G'};
  put_u32(out, kEmbeddingFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.reserve(16 + 4 * m.data().size());
  for (double x : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  return out;
}

Matrix decode_embeddings(std::span<const std::uint8_t> bytes, std::optional<std::size_t> expected_cols) {
  Reader r(bytes, "embedding file");
  r.magic("PALG");
  const std::uint32_t version = r.u32("version");
  if (version != kEmbeddingFormatVersion) {
    std::ostringstream msg;
    msg << "embedding file: unsupported version " << version << " at byte 4";
    fail(ErrorKind::Format, msg.str());
  }
  const std::uint32_t rows = r.u32("rows");
  const std::uint32_t cols = r.u32("cols");
  if (expected_cols && *expected_cols != cols) {
    std::ostringstream msg;
    msg << "embedding file: header declares " << cols << " columns, manifest expects "
        << *expected_cols;
    fail(ErrorKind::Input, msg.str());
  }
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  r.need(count * 4, "payload");
  Matrix m(rows, cols);
  for (double& x : m.data()) x = static_cast<double>(std::bit_cast<float>(r.u32("payload")));
  r.expect_end();
  require(m.all_finite(), ErrorKind::Numeric, "embedding file: payload has non-finite values");
  return m;
}

void save_embeddings(const Matrix& m, const std::filesystem::path& path) {
  write_file(path, encode_embeddings(m));
}

Matrix load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_cols) {
  try {
    return decode_embeddings(read_file(path), expected_cols);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_prompt(const Prompt& prompt) {
  std::vector<std::uint8_t> out{'P', 'A', 'L', 'P'};
  put_u32(out, kPromptFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(prompt.values.size()));
  put_u32(out, prompt.trained_with_projection ? 1U : 0U);
  put_u64(out, prompt.basis_fingerprint);
  put_u64(out, prompt.config_hash);
  put_u32(out, static_cast<std::uint32_t>(prompt.source_task.size()));
  out.insert(out.end(), prompt.source_task.begin(), prompt.source_task.end());
  for (double x : prompt.values) put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

Prompt decode_prompt(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "prompt file");
  r.magic("PALP");
  const std::uint32_t version = r.u32("version");
  if (version != kPromptFormatVersion) {
    std::ostringstream msg;
    msg << "prompt file: unsupported version " << version << " at byte 4";
    fail(ErrorKind::Format, msg.str());
  }
  Prompt p;
  const std::uint32_t dim = r.u32("dim");
  const std::uint32_t flags = r.u32("flags");
  if ((flags & ~1U) != 0) fail(ErrorKind::Format, "prompt file: unknown flag bits at byte 12");
  p.trained_with_projection = (flags & 1U) != 0;
  p.basis_fingerprint = r.u64("basis fingerprint");
  p.config_hash = r.u64("config hash");
  const std::uint32_t len = r.u32("source task length");
  p.source_task = r.text(len, "source task");
  r.need(static_cast<std::size_t>(dim) * 8, "values");
  p.values.resize(dim);
  for (double& x : p.values) x = std::bit_cast<double>(r.u64("values"));
  r.expect_end();
  for (double x : p.values)
    require(std::isfinite(x), ErrorKind::Numeric, "prompt file: non-finite prompt value");
  return p;
}

void save_prompt(const Prompt& prompt, const std::filesystem::path& path) {
  write_file(path, encode_prompt(prompt));
}

Prompt load_prompt(const std::filesystem::path& path) {
  try {
    return decode_prompt(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void save_basis(const ProjectionBasis& basis, const std::filesystem::path& path,
                std::uint64_t config_hash) {
  json doc;
  doc["format"] = "palg-basis";
  doc["version"] = 1;
  doc["config_hash"] = config_hash;
  doc["ambient_dim"] = basis.ambient_dim;
  doc["m"] = basis.m;
  doc["energy_fraction"] = basis.energy_fraction;
  doc["eigenvalues"] = basis.eigenvalues;
  doc["fingerprint"] = basis.fingerprint();
  std::vector<double> cols(basis.basis.data().begin(), basis.basis.data().end());
  doc["basis_row_major"] = cols;
  write_text(path, doc.dump(1) + "\n");
}

namespace {

json parse_json(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": invalid JSON: " + e.what());
  }
}

template <typename T>
T field(const json& doc, const char* key, const std::filesystem::path& path) {
  if (!doc.contains(key)) fail(ErrorKind::Format, path.string() + ": missing key '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

ProjectionBasis load_basis(const std::filesystem::path& path) {
  const json doc = parse_json(path);
  if (field<std::string>(doc, "format", path) != "palg-basis")
    fail(ErrorKind::Format, path.string() + ": not a basis document");
  ProjectionBasis b;
  b.ambient_dim = field<std::size_t>(doc, "ambient_dim", path);
  b.m = field<std::size_t>(doc, "m", path);
  b.energy_fraction = field<double>(doc, "energy_fraction", path);
  b.eigenvalues = field<std::vector<double>>(doc, "eigenvalues", path);
  auto values = field<std::vector<double>>(doc, "basis_row_major", path);
  require(values.size() == b.ambient_dim * b.m && b.eigenvalues.size() == b.ambient_dim,
          ErrorKind::Format, path.string() + ": basis arrays have the wrong length");
  b.basis = Matrix(b.ambient_dim, b.m, std::move(values));
  require(b.fingerprint() == field<std::uint64_t>(doc, "fingerprint", path), ErrorKind::Format,
          path.string() + ": basis fingerprint does not match its vectors");
  return b;
}

void save_dataset(const std::filesystem::path& dir, const TextModel& model,
                  const MultiViewDataset& dataset, std::uint64_t config_hash) {
  std::filesystem::create_directories(dir);
  save_embeddings(model.vocab.embeddings, dir / "vocab.palg");
  save_embeddings(dataset.features, dir / "images.palg");

  json doc;
  doc["format"] = "palg-manifest";
  doc["version"] = 1;
  doc["config_hash"] = config_hash;
  doc["vocabulary"] = {{"tokens", model.vocab.token_names}, {"embeddings", "vocab.palg"}};
  if (model.encoder.kind == TextEncoder::Kind::Identity)
    doc["encoder"] = {{"kind", "identity"}};
  else
    doc["encoder"] = {{"kind", "orthogonal"}, {"seed", model.encoder.seed}};
  doc["common_tokens"] = model.common_tokens;

  json views = json::array();
  for (const auto& view : dataset.views) {
    json classes = json::array();
    for (std::size_t c = 0; c < view.size(); ++c)
      classes.push_back({{"name", view.class_names[c]}, {"tokens", view.class_token_ids[c]}});
    views.push_back({{"name", view.view_name}, {"classes", classes}});
  }
  doc["views"] = views;

  json labels = json::array();
  json split = json::array();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    json row = json::array();
    for (std::size_t v = 0; v < dataset.view_count(); ++v) row.push_back(dataset.label(i, v));
    labels.push_back(row);
    split.push_back(dataset.split[i] == Split::Train ? "train" : "test");
  }
  doc["images"] = {{"features", "images.palg"}, {"ids", dataset.sample_ids},
                   {"labels", labels}, {"split", split}};

  json seen = json::array();
  if (dataset.view_count() == 2)
    for (std::size_t a = 0; a < dataset.views[0].size(); ++a)
      for (std::size_t b = 0; b < dataset.views[1].size(); ++b)
        if (dataset.pair_seen[dataset.pair_index(a, b)]) seen.push_back({a, b});
  doc["seen_pairs"] = seen;
  write_text(dir / "manifest.json", doc.dump(1) + "\n");
}

LoadedDataset load_dataset(const std::filesystem::path& manifest_path) {
  const json doc = parse_json(manifest_path);
  const auto& path = manifest_path;
  if (field<std::string>(doc, "format", path) != "palg-manifest")
    fail(ErrorKind::Format, path.string() + ": not a dataset manifest");
  const auto base = manifest_path.parent_path();

  LoadedDataset out;
  out.config_hash = doc.value("config_hash", std::uint64_t{0});
  const json vocab = field<json>(doc, "vocabulary", path);
  out.model.vocab.token_names = field<std::vector<std::string>>(vocab, "tokens", path);
  out.model.vocab.embeddings = load_embeddings(base / field<std::string>(vocab, "embeddings", path));
  out.model.vocab.validate();
  const std::size_t d = out.model.vocab.dim();

  const json enc = doc.value("encoder", json{{"kind", "identity"}});
  const auto kind = field<std::string>(enc, "kind", path);
  if (kind == "identity")
    out.model.encoder = TextEncoder::identity();
  else if (kind == "orthogonal")
    out.model.encoder = TextEncoder::orthogonal(d, field<std::uint64_t>(enc, "seed", path));
  else
    fail(ErrorKind::Format, path.string() + ": unknown encoder kind '" + kind + "'");
  out.model.common_tokens = field<std::vector<TokenId>>(doc, "common_tokens", path);
  for (TokenId id : out.model.common_tokens)
    require(id < out.model.vocab.size(), ErrorKind::Input, path.string() + ": common token out of range");

  MultiViewDataset& ds = out.dataset;
  for (const auto& v : field<json>(doc, "views", path)) {
    ViewLabelSpace view;
    view.view_name = field<std::string>(v, "name", path);
    for (const auto& c : field<json>(v, "classes", path)) {
      view.class_names.push_back(field<std::string>(c, "name", path));
      view.class_token_ids.push_back(field<std::vector<TokenId>>(c, "tokens", path));
    }
    ds.views.push_back(std::move(view));
  }

  const json images = field<json>(doc, "images", path);
  ds.features = load_embeddings(base / field<std::string>(images, "features", path), d);
  for (std::size_t i = 0; i < ds.features.rows(); ++i) {
    auto row = ds.features.row(i);
    const double len = norm(row);
    require(len > 0.0, ErrorKind::Input, path.string() + ": image feature with zero norm");
    for (double& x : row) x /= len;
  }
  ds.sample_ids = field<std::vector<std::string>>(images, "ids", path);
  const auto labels = field<std::vector<std::vector<std::size_t>>>(images, "labels", path);
  const auto split = field<std::vector<std::string>>(images, "split", path);
  require(labels.size() == ds.size() && split.size() == ds.size() && ds.sample_ids.size() == ds.size(),
          ErrorKind::Input, path.string() + ": labels/split/ids do not match the number of images");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    require(labels[i].size() == ds.view_count(), ErrorKind::Input,
            path.string() + ": image " + ds.sample_ids[i] + " has the wrong number of labels");
    ds.labels.insert(ds.labels.end(), labels[i].begin(), labels[i].end());
    if (split[i] == "train")
      ds.split.push_back(Split::Train);
    else if (split[i] == "test")
      ds.split.push_back(Split::Test);
    else
      fail(ErrorKind::Format, path.string() + ": unknown split tag '" + split[i] + "'");
  }
  if (ds.view_count() == 2) {
    ds.pair_seen.assign(ds.views[0].size() * ds.views[1].size(), false);
    for (const auto& pair : field<std::vector<std::vector<std::size_t>>>(doc, "seen_pairs", path)) {
      require(pair.size() == 2 && pair[0] < ds.views[0].size() && pair[1] < ds.views[1].size(),
              ErrorKind::Input, path.string() + ": malformed seen pair");
      ds.pair_seen[ds.pair_index(pair[0], pair[1])] = true;
    }
  }
  ds.validate(out.model.vocab);
  return out;
}

}  // namespace palg
