#include "mdvt/feature_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mdvt/error.hpp"

namespace mdvt {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("unexpected end of file");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("unexpected end of file");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

void write_feature_block(std::ostream& out, const Matrix& m) {
  out.write(kFeatureMagic, sizeof kFeatureMagic);
  write_u32(out, static_cast<std::uint32_t>(m.rows));
  write_u32(out, static_cast<std::uint32_t>(m.cols));
  for (double v : m.data) write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

Matrix read_feature_block(std::istream& in, const std::string& what) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kFeatureMagic, 8) != 0)
    throw DataError(what + ": bad magic (expected MDVTFEAT)");
  const auto rows = read_u32(in);
  const auto cols = read_u32(in);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const float v = std::bit_cast<float>(read_u32(in));
      if (!std::isfinite(v))
        throw DataError(what + ": non-finite value at (" + std::to_string(r) + "," + std::to_string(c) + ")");
      m.at(r, c) = v;
    }
  }
  return m;
}

void save_feature_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_feature_block(out, m);
}

Matrix read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file " + path.string());
  return read_feature_block(in, path.string());
}

ModalityFeatures load_modality_features(const std::filesystem::path& path, const std::string& modality,
                                        std::size_t num_items) {
  if (modality == "id") throw DataError("modality 'id' has no feature matrix");
  Matrix m = read_feature_file(path);
  if (m.rows != num_items)
    throw DataError(path.string() + ": row count " + std::to_string(m.rows) + " != num_items " +
                    std::to_string(num_items));
  if (m.cols < 1) throw DataError(path.string() + ": zero feature columns");
  return {modality, std::move(m)};
}

Matrix reorder_rows_by_sidecar(const Matrix& raw, const std::filesystem::path& sidecar, const IdMap& items) {
  std::ifstream in(sidecar);
  if (!in) throw DataError("cannot open sidecar " + sidecar.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ids.push_back(line);
  }
  if (ids.size() != raw.rows)
    throw DataError(sidecar.string() + ": " + std::to_string(ids.size()) + " ids for " + std::to_string(raw.rows) +
                    " feature rows");
  Matrix out(items.size(), raw.cols);
  std::vector<bool> filled(items.size(), false);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto it = items.index.find(ids[r]);
    if (it == items.index.end()) continue;
    std::copy(raw.row(r).begin(), raw.row(r).end(), out.row(it->second).begin());
    filled[it->second] = true;
  }
  for (std::size_t i = 0; i < filled.size(); ++i)
    if (!filled[i]) throw DataError(sidecar.string() + ": no feature row for item '" + items.names[i] + "'");
  return out;
}

}  // namespace mdvt
