#include "homog/report.hpp"

#include "homog/errors.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace homog::report {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_row(const std::vector<Cell>& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::int64_t>)
            line += std::to_string(v);
          else if constexpr (std::is_same_v<T, double>)
            line += format_double(v);
          else if constexpr (std::is_same_v<T, std::string>)
            line += escape(v);
        },
        row[i]);
  }
  line += "\r\n";
  return line;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw ResourceError("cannot open '" + path + "' for writing");
  std::vector<Cell> cells(header.begin(), header.end());
  out_ << format_row(cells);
  out_.flush();
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_) throw UsageError("CSV row has the wrong number of fields");
  out_ << format_row(cells);
  out_.flush();
  if (!out_) throw ResourceError("write to '" + path_ + "' failed");
}

std::string git_blob_sha1(const std::string& content) {
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, head.data(), head.size()) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw ResourceError("SHA-1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_sidecar(const std::string& csv_path, const nlohmann::json& config, const nlohmann::json& extra) {
  nlohmann::json j;
  j["csv"] = std::filesystem::path(csv_path).filename().string();
  j["csv_sha1"] = git_blob_sha1(read_file(csv_path));
  j["config"] = config;
  j["config_sha1"] = git_blob_sha1(config.dump());
  if (!extra.is_null())
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  std::ofstream out(csv_path + ".json", std::ios::trunc);
  if (!out) throw ResourceError("cannot write metadata for '" + csv_path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace homog::report
