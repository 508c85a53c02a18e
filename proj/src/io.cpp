#include "ionsim/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ionsim {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

void append_comment(std::string& out, const std::string& comment) {
  if (comment.empty()) return;
  std::istringstream in(comment);
  std::string line;
  while (std::getline(in, line)) out += "# " + line + "\n";
}

}  // namespace

std::string fringe_csv(const FringeDataset& dataset, const std::string& header_comment) {
  std::string out;
  append_comment(out, header_comment);
  out += "t_s,phi_rad,p_est,shots\n";
  for (const auto& pt : dataset.points) {
    out += format_g17(pt.t) + "," + format_g17(pt.phi) + "," + format_g17(pt.p_est) + "," +
           std::to_string(pt.shots) + "\n";
  }
  return out;
}

std::string allan_csv(const AllanResult& result, bool with_sql_column,
                      const std::string& header_comment) {
  std::string out;
  append_comment(out, header_comment);
  out += with_sql_column ? "N_b,sigma,delta_phi,sql_delta_phi\n" : "N_b,sigma,delta_phi\n";
  for (const auto& row : result.rows) {
    out += std::to_string(row.n_b) + "," + format_g17(row.sigma) + "," +
           format_g17(row.delta_phi);
    if (with_sql_column) out += "," + format_g17(sql_curve(row.n_b));
    out += "\n";
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) {
      f.close();
      std::remove(tmp.c_str());
      throw std::runtime_error("write failed for " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

void write_files_atomic(const std::vector<std::pair<std::string, std::string>>& files) {
  std::vector<std::string> temps;
  temps.reserve(files.size());
  try {
    for (const auto& [path, content] : files) {
      std::string tmp = path + ".tmp";
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
      f.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!f) throw std::runtime_error("write failed for " + tmp);
      temps.push_back(tmp);
    }
    for (std::size_t i = 0; i < files.size(); ++i)
      if (std::rename(temps[i].c_str(), files[i].first.c_str()) != 0)
        throw std::runtime_error("cannot rename " + temps[i]);
  } catch (...) {
    for (const auto& t : temps) std::remove(t.c_str());
    throw;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace ionsim
