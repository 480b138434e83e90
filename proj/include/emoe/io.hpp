// Copyright 2026 The EMoE Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace emoe::io {

/// Writes to a sibling temporary file, then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::span<const char> bytes);
void atomic_write(const std::filesystem::path& path, const std::string& text);

std::string read_file(const std::filesystem::path& path);

/// Little-endian IEEE-754 binary64 encoding, independent of host order.
std::string encode_f64_le(std::span<const double> values);
std::vector<double> decode_f64_le(const std::string& bytes);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace emoe::io
