#pragma once

// On-disk formats.
//
// Embedding file ("PALG"), all integers little-endian:
//   0  magic "PALG"
//   4  u32 format version (1)
//   8  u32 rows
//   12 u32 cols
//   16 rows*cols float32, row-major
//
// Prompt file ("PALP"):
//   0  magic "PALP"
//   4  u32 format version (1)
//   8  u32 dim
//   12 u32 flags (bit 0: trained with projection)
//   16 u64 basis fingerprint (0 = unconstrained)
//   24 u64 config hash
//   32 u32 source-task length L
//   36 L bytes of UTF-8 source task
//   36+L dim float64
//
// Bases and dataset manifests are JSON documents.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "palg/data.hpp"
#include "palg/linalg.hpp"
#include "palg/vlm.hpp"

namespace palg {

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;
inline constexpr std::uint32_t kPromptFormatVersion = 1;

std::vector<std::uint8_t> encode_embeddings(const Matrix& m);
Matrix decode_embeddings(std::span<const std::uint8_t> bytes,
                         std::optional<std::size_t> expected_cols = std::nullopt);
void save_embeddings(const Matrix& m, const std::filesystem::path& path);
Matrix load_embeddings(const std::filesystem::path& path,
                       std::optional<std::size_t> expected_cols = std::nullopt);

std::vector<std::uint8_t> encode_prompt(const Prompt& prompt);
Prompt decode_prompt(std::span<const std::uint8_t> bytes);
void save_prompt(const Prompt& prompt, const std::filesystem::path& path);
Prompt load_prompt(const std::filesystem::path& path);

void save_basis(const ProjectionBasis& basis, const std::filesystem::path& path,
                std::uint64_t config_hash = 0);
// Verifies the stored fingerprint against the stored vectors.
ProjectionBasis load_basis(const std::filesystem::path& path);

struct LoadedDataset {
  TextModel model;
  MultiViewDataset dataset;
  std::uint64_t config_hash = 0;
};

// Writes manifest.json, vocab.palg and images.palg into `dir`.
void save_dataset(const std::filesystem::path& dir, const TextModel& model,
                  const MultiViewDataset& dataset, std::uint64_t config_hash = 0);
// Image features are renormalized after the float32 round trip.
LoadedDataset load_dataset(const std::filesystem::path& manifest_path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace palg
