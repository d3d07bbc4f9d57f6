#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mdvt/dataset.hpp"
#include "mdvt/matrix.hpp"

namespace mdvt {

// Binary feature layout: "MDVTFEAT", u32 rows, u32 cols (little-endian), then
// rows*cols little-endian float32 values, row-major.
inline constexpr char kFeatureMagic[8] = {'M', 'D', 'V', 'T', 'F', 'E', 'A', 'T'};

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);

/// Values are narrowed to float32 on write.
void write_feature_block(std::ostream& out, const Matrix& m);
Matrix read_feature_block(std::istream& in, const std::string& what);

void save_feature_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_feature_file(const std::filesystem::path& path);

/// Loads one modality's matrix and checks it has exactly `num_items` rows.
ModalityFeatures load_modality_features(const std::filesystem::path& path, const std::string& modality,
                                        std::size_t num_items);

/// Reads a sidecar of raw item ids (one per line, matching feature rows) and
/// returns the matrix permuted into dense item order. Sidecar ids unknown to
/// `items` are skipped; dense items missing from the sidecar are an error.
Matrix reorder_rows_by_sidecar(const Matrix& raw, const std::filesystem::path& sidecar, const IdMap& items);

}  // namespace mdvt
