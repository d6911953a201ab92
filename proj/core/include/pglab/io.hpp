#pragma once

#include "pglab/mdp.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace pglab {

/// A double as text with 17 significant digits (round-trip exact), locale
/// independent. Throws ContractViolation on non-finite values — reports and
/// data files are finite by contract.
std::string format_double(double value);

/// Deterministic compact JSON: object keys in sorted order, floats via
/// format_double. Byte-identical output for equal values is what makes
/// rerun-equality checks meaningful.
std::string canonical_dump(const nlohmann::json& value);

/// Long-format CSV of every scalar leaf in a report:
/// run_id,quantity,coordinate,value — quantity is the dotted object path,
/// coordinate the dotted array index path (empty for plain scalars).
std::string csv_dump(const nlohmann::json& report, const std::string& run_id);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Parse with a line number in the diagnostic on syntax errors.
nlohmann::json parse_json_file(const std::string& path);

nlohmann::json mdp_to_json(const Mdp& mdp);

/// Build and fully validate an Mdp from its JSON document; all shape or
/// invariant violations surface as ParseError.
Mdp mdp_from_json(const nlohmann::json& doc);

Mdp load_mdp(const std::string& path);
void write_mdp(const Mdp& mdp, const std::string& path);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const nlohmann::json& a, const char* what);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& a, const char* what);

/// {"<key>": 2-d array} -> matrix; used for theta and baseline tables.
Eigen::MatrixXd load_table(const std::string& path, const std::string& key);

/// {"features": 3-d array [s][a][k]} -> one (actions x features) matrix per
/// state.
std::vector<Eigen::MatrixXd> load_feature_tensor(const std::string& path);

} // namespace pglab
