#include "tvar/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tvar {

namespace {

void write_row(std::ostream& out, int draw, const std::string& block,
               const double* data, std::size_t count) {
  out << draw << ',' << block;
  char buf[32];
  for (std::size_t i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", data[i]);
    out << ',' << buf;
  }
  out << '\n';
}

void write_matrix(std::ostream& out, int draw, const std::string& block,
                  const MatrixXd& m) {
  write_row(out, draw, block, m.data(), static_cast<std::size_t>(m.size()));
}

MatrixXd to_matrix(const std::vector<double>& v, int rows) {
  const int cols = rows > 0 ? static_cast<int>(v.size()) / rows : 0;
  return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

}  // namespace

void write_draws(const std::string& path, const PosteriorDraws& draws) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_draws: cannot open " + path);
  out << "# draw,block,values (matrices column-major)\n";
  for (std::size_t d = 0; d < draws.draws.size(); ++d) {
    const auto& dr = draws.draws[d];
    const int idx = static_cast<int>(d);
    if (dr.factors.theta1.size() > 0) {
      out << idx << ",rank," << dr.factors.rank() << '\n';
      write_matrix(out, idx, "theta1", dr.factors.theta1);
      write_matrix(out, idx, "theta2", dr.factors.theta2);
      write_matrix(out, idx, "theta3", dr.factors.theta3);
    }
    out << idx << ",A_rows," << dr.A.rows() << '\n';
    write_matrix(out, idx, "A", dr.A);
    if (dr.intercept.size() > 0)
      write_row(out, idx, "intercept", dr.intercept.data(), dr.intercept.size());
    if (const auto* hom = std::get_if<Homoskedastic>(&dr.vol)) {
      out << idx << ",vol.type,0\n";
      write_matrix(out, idx, "vol.omega", hom->omega);
    } else if (const auto* csv = std::get_if<CommonSV>(&dr.vol)) {
      out << idx << ",vol.type,1\n";
      write_row(out, idx, "vol.h", csv->h.data(), csv->h.size());
      const double pars[2] = {csv->phi, csv->sigma_h2};
      write_row(out, idx, "vol.pars", pars, 2);
      write_matrix(out, idx, "vol.omega", csv->omega);
    } else {
      const auto& sv = std::get<CholeskySV>(dr.vol);
      out << idx << ",vol.type,2\n";
      write_matrix(out, idx, "vol.H", sv.H);
      write_row(out, idx, "vol.mu", sv.mu.data(), sv.mu.size());
      write_row(out, idx, "vol.phi", sv.phi.data(), sv.phi.size());
      write_row(out, idx, "vol.sigma2", sv.sigma2.data(), sv.sigma2.size());
      write_matrix(out, idx, "vol.B0", sv.B0);
    }
  }
}

PosteriorDraws read_draws(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_draws: cannot open " + path);
  std::string line;
  // blocks[draw][name] = values
  std::map<int, std::map<std::string, std::vector<double>>> blocks;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    const int idx = std::stoi(cell);
    std::string name;
    std::getline(ss, name, ',');
    auto& vals = blocks[idx][name];
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
  }
  PosteriorDraws out;
  for (auto& [idx, b] : blocks) {
    Draw dr;
    if (b.count("rank")) {
      const int R = static_cast<int>(b["rank"][0]);
      dr.factors.theta1 = to_matrix(b.at("theta1"), static_cast<int>(b.at("theta1").size()) / R);
      dr.factors.theta2 = to_matrix(b.at("theta2"), static_cast<int>(b.at("theta2").size()) / R);
      dr.factors.theta3 = to_matrix(b.at("theta3"), static_cast<int>(b.at("theta3").size()) / R);
    }
    const int a_rows = static_cast<int>(b.at("A_rows")[0]);
    dr.A = to_matrix(b.at("A"), a_rows);
    const int n = static_cast<int>(dr.A.cols());
    if (b.count("intercept"))
      dr.intercept = Eigen::Map<const VectorXd>(b["intercept"].data(), b["intercept"].size());
    const int vol_type = static_cast<int>(b.at("vol.type")[0]);
    if (vol_type == 0) {
      dr.vol = Homoskedastic{to_matrix(b.at("vol.omega"), n)};
    } else if (vol_type == 1) {
      CommonSV csv;
      csv.h = Eigen::Map<const VectorXd>(b["vol.h"].data(), b["vol.h"].size());
      csv.phi = b.at("vol.pars")[0];
      csv.sigma_h2 = b.at("vol.pars")[1];
      csv.omega = to_matrix(b.at("vol.omega"), n);
      dr.vol = csv;
    } else {
      CholeskySV sv;
      sv.H = to_matrix(b.at("vol.H"), static_cast<int>(b.at("vol.H").size()) / n);
      sv.mu = Eigen::Map<const VectorXd>(b["vol.mu"].data(), b["vol.mu"].size());
      sv.phi = Eigen::Map<const VectorXd>(b["vol.phi"].data(), b["vol.phi"].size());
      sv.sigma2 = Eigen::Map<const VectorXd>(b["vol.sigma2"].data(), b["vol.sigma2"].size());
      sv.B0 = to_matrix(b.at("vol.B0"), n);
      dr.vol = sv;
    }
    out.draws.push_back(std::move(dr));
  }
  return out;
}

}  // namespace tvar
