#pragma once

#include "magspec/core.hpp"
#include "magspec/oscillator.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace magspec {

/// One cached eigenvalue with the boundary data of its eigenfunction.
struct BranchRecord {
    BoundaryCondition bc;
    int n = 0;
    double eta = 0.0;
    std::string grid;
    double lambda = 0.0;
    double deviation = 0.0;
    double boundary_value = 0.0;
    double boundary_derivative = 0.0;

    /// Versioned JSON line; eta in %.16e, values in %.17g so they round-trip exactly.
    std::string to_json_line() const;
    static BranchRecord from_json_line(const std::string& line);
};

/// Append-only JSON-lines store of branch samples keyed by (bc, n, eta, grid).
///
/// Records whose grid fingerprint differs from the requested one are ignored,
/// so a changed discretization never reads stale values.
class BranchStore {
public:
    explicit BranchStore(std::filesystem::path directory);

    std::optional<BranchRecord> lookup(const BoundaryCondition& bc, int n, double eta,
                                       const std::string& grid) const;
    void insert(const BranchRecord& record);
    std::size_t size() const;
    const std::filesystem::path& file() const noexcept { return file_; }

private:
    using Key = std::tuple<std::string, int, double, std::string>;

    std::filesystem::path file_;
    mutable std::mutex mutex_;
    std::map<Key, BranchRecord> records_;
};

/// Solves lambda_n(eta) through an optional store.
EigenPair cached_eigenpair(double eta, const BoundaryCondition& bc, int n, const OscillatorGrid& grid,
                           BranchStore* store);

/// Branch values on a quantized eta lattice with 4-point Lagrange interpolation.
///
/// Nodes are solved lazily and shared between threads.
class BranchTable {
public:
    BranchTable(BoundaryCondition bc, int n_max, OscillatorGrid grid, double spacing = 1e-3);

    /// Interpolated lambda_n(eta).
    double value(int n, double eta);
    /// lambda_n at lattice node k (eta = k * spacing).
    double node(int n, long k);
    std::size_t nodes_computed() const;
    double spacing() const noexcept { return spacing_; }
    int n_max() const noexcept { return n_max_; }

private:
    const std::vector<double>& node_values(long k);

    BoundaryCondition bc_;
    int n_max_;
    OscillatorGrid grid_;
    double spacing_;
    mutable std::mutex mutex_;
    std::unordered_map<long, std::vector<double>> nodes_;
};

}  // namespace magspec
