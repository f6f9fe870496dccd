#include "ch2ch/io.hpp"

#include <openssl/sha.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ch2ch/error.hpp"

namespace ch2ch {

void read_jsonl(const std::filesystem::path& path,
                const std::function<void(std::size_t, const json&)>& fn,
                const std::function<void(std::size_t, const std::string&)>&
                    on_bad_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      if (on_bad_line) {
        on_bad_line(lineno, "invalid JSON");
        continue;
      }
      throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(lineno) +
                                     ": invalid JSON");
    }
    fn(lineno, doc);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::filesystem::path& path,
                  std::string_view content) {
  std::filesystem::path dir = path.parent_path();
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorKind::Io,
                "rename " + tmp.string() + " -> " + path.string() + ": " +
                    ec.message());
  }
}

void append_line(const std::filesystem::path& path, std::string_view line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot append to " + path.string());
  }
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.put('\n');
  out.flush();
}

std::string join_jsonl(const std::vector<json>& records) {
  std::string out;
  for (const json& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::string csv_field(std::string_view value) {
  bool needs_quote = value.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quote) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += '\n';
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(),
         digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xF]);
  }
  return out;
}

std::string sha256_file_hex(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace ch2ch
