// File plumbing shared by the pipeline stages: JSONL streams, CSV emission,
// atomic writes, content hashes.

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ch2ch {

using nlohmann::json;

// Reads a JSONL file, invoking `fn(line_number, parsed)` per non-empty line.
// Parse failures are reported through `on_bad_line(line_number, error)`;
// if `on_bad_line` is empty they throw Error(Io).
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(std::size_t, const json&)>& fn,
                const std::function<void(std::size_t, const std::string&)>&
                    on_bad_line = {});

std::string read_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory followed by rename, so a
// stage either produces the whole artifact or nothing.
void atomic_write(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

std::string join_jsonl(const std::vector<json>& records);

// CSV with minimal quoting (fields containing comma, quote or newline are
// quoted; quotes doubled).
std::string csv_field(std::string_view value);
std::string csv_row(const std::vector<std::string>& fields);

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

// Fixed-precision float formatting for CSV artifacts (locale-independent).
std::string format_double(double v, int precision);

}  // namespace ch2ch
