#include "magspec/branch_cache.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace magspec {
namespace {

constexpr int kRecordVersion = 1;

std::string fixed17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size()) throw InvalidArgument("branch record: bad number '" + s + "'");
        return v;
    }
    return j.get<double>();
}

}  // namespace

std::string BranchRecord::to_json_line() const {
    // Hand-formatted so numbers keep their exact text form.
    std::string line = "{\"v\":" + std::to_string(kRecordVersion) + ",\"bc\":\"" + bc.to_string() +
                       "\",\"n\":" + std::to_string(n) + ",\"eta\":\"" + fixed17(eta) +
                       "\",\"grid\":\"" + grid + "\",\"lambda\":\"" + g17(lambda) +
                       "\",\"deviation\":\"" + g17(deviation) + "\",\"u\":\"" + g17(boundary_value) +
                       "\",\"du\":\"" + g17(boundary_derivative) + "\"}";
    return line;
}

BranchRecord BranchRecord::from_json_line(const std::string& line) {
    auto j = nlohmann::json::parse(line);
    if (j.at("v").get<int>() != kRecordVersion) throw InvalidArgument("branch record: unsupported version");
    BranchRecord r;
    r.bc = BoundaryCondition::parse(j.at("bc").get<std::string>());
    r.n = j.at("n").get<int>();
    r.eta = parse_double(j.at("eta"));
    r.grid = j.at("grid").get<std::string>();
    r.lambda = parse_double(j.at("lambda"));
    r.deviation = parse_double(j.at("deviation"));
    r.boundary_value = parse_double(j.at("u"));
    r.boundary_derivative = parse_double(j.at("du"));
    return r;
}

BranchStore::BranchStore(std::filesystem::path directory) {
    std::filesystem::create_directories(directory);
    file_ = directory / "branches.v1.jsonl";
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            BranchRecord r = BranchRecord::from_json_line(line);
            records_[{r.bc.to_string(), r.n, r.eta, r.grid}] = r;
        } catch (const std::exception&) {
            // A torn trailing line from an interrupted run is skipped.
        }
    }
}

std::optional<BranchRecord> BranchStore::lookup(const BoundaryCondition& bc, int n, double eta,
                                                const std::string& grid) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = records_.find({bc.to_string(), n, eta, grid});
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void BranchStore::insert(const BranchRecord& record) {
    std::lock_guard<std::mutex> lock(mutex_);
    Key key{record.bc.to_string(), record.n, record.eta, record.grid};
    if (records_.count(key)) return;
    records_[key] = record;
    std::ofstream out(file_, std::ios::app);
    if (!out) throw Error("branch cache: cannot append to " + file_.string());
    out << record.to_json_line() << '\n';
}

std::size_t BranchStore::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return records_.size();
}

EigenPair cached_eigenpair(double eta, const BoundaryCondition& bc, int n, const OscillatorGrid& grid,
                           BranchStore* store) {
    const std::string fp = grid.fingerprint();
    if (store) {
        if (auto r = store->lookup(bc, n, eta, fp)) {
            EigenPair p;
            p.index = n;
            p.lambda = r->lambda;
            p.deviation = r->deviation;
            p.boundary_value = r->boundary_value;
            p.boundary_derivative = r->boundary_derivative;
            p.refined = true;
            return p;
        }
    }
    EigenPair p = solve_spectrum(eta, bc, n, grid).back();
    if (store) {
        store->insert({bc, n, eta, fp, p.lambda, p.deviation, p.boundary_value, p.boundary_derivative});
    }
    return p;
}

BranchTable::BranchTable(BoundaryCondition bc, int n_max, OscillatorGrid grid, double spacing)
    : bc_(bc), n_max_(n_max), grid_(grid), spacing_(spacing) {
    if (n_max < 0) throw InvalidArgument("BranchTable: n_max must be >= 0");
    if (!(spacing > 0.0)) throw InvalidArgument("BranchTable: spacing must be positive");
    grid_.validate();
}

const std::vector<double>& BranchTable::node_values(long k) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = nodes_.find(k);
        if (it != nodes_.end()) return it->second;
    }
    std::vector<double> v = solve_eigenvalues(static_cast<double>(k) * spacing_, bc_, n_max_, grid_);
    std::lock_guard<std::mutex> lock(mutex_);
    return nodes_.emplace(k, std::move(v)).first->second;
}

double BranchTable::node(int n, long k) {
    if (n < 0 || n > n_max_) throw InvalidArgument("BranchTable: branch index out of range");
    return node_values(k)[static_cast<std::size_t>(n)];
}

double BranchTable::value(int n, double eta) {
    if (!std::isfinite(eta)) throw InvalidArgument("BranchTable: non-finite eta");
    const double x = eta / spacing_;
    const long k = static_cast<long>(std::floor(x));
    const double t = x - static_cast<double>(k);
    if (t == 0.0) return node(n, k);
    double f[4];
    for (int i = 0; i < 4; ++i) f[i] = node(n, k - 1 + i);
    // Lagrange weights on nodes -1, 0, 1, 2.
    const double w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    return w0 * f[0] + w1 * f[1] + w2 * f[2] + w3 * f[3];
}

std::size_t BranchTable::nodes_computed() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return nodes_.size();
}

}  // namespace magspec
