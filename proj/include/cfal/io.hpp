// io.hpp
//
// Text formats: worlds and classes as JSON, sample sets as CSV rows
// `epoch,x,z,y`, linear models as JSON weight arrays.
#pragma once

#include "cfal/estimators.hpp"
#include "cfal/hypothesis_space.hpp"

#include <string>
#include <vector>

namespace cfal {

/// Shortest decimal that round-trips to the same double; "inf"/"nan" otherwise.
std::string format_double(double v);

/// {"mass":[...], "label_prob":[...], "q0":[...], "hypotheses":[[...],...]}
std::string world_to_json(const FiniteWorld& world, const HypothesisClass& cls);
struct ParsedWorld {
  FiniteWorld world;
  HypothesisClass hypotheses;
};
ParsedWorld world_from_json(const std::string& text);

std::string samples_to_csv(const std::vector<Sample>& samples);
std::vector<Sample> samples_from_csv(const std::string& text);

std::string weights_to_json(const Eigen::VectorXd& weights);
Eigen::VectorXd weights_from_json(const std::string& text);

}  // namespace cfal
