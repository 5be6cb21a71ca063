#pragma once

#include <stdexcept>
#include <vector>

#include "lcasel/dataset.hpp"
#include "lcasel/logreg.hpp"

namespace lcasel {

// Post-hoc association screen between discarded and selected variables.
// bic_diff_as(o, c) = BIC(X_o | X_c) - BIC(X_o); positive values signal
// evidence of association.
struct AssociationMatrix {
  std::vector<int> selected;   // column variables
  std::vector<int> discarded;  // row variables
  std::vector<std::vector<double>> bic_diff_as;  // rows x cols
};

inline AssociationMatrix association_screen(const CategoricalDataset& data,
                                            const VariableRoles& roles) {
  if (roles.clustering.empty() || roles.other.empty())
    throw std::invalid_argument("both role sets must be non-empty");
  roles.validate(data.n_vars);

  AssociationMatrix out;
  out.selected = roles.clustering;
  out.discarded = roles.other;
  out.bic_diff_as.assign(out.discarded.size(),
                         std::vector<double>(out.selected.size(), 0.0));
  for (std::size_t i = 0; i < out.discarded.size(); ++i) {
    const int xo = out.discarded[i];
    const double bic_null = fit_multinom(data, xo, {}).bic;
    for (std::size_t j = 0; j < out.selected.size(); ++j) {
      const int xc = out.selected[j];
      const int preds[] = {xc};
      out.bic_diff_as[i][j] = fit_multinom(data, xo, preds).bic - bic_null;
    }
  }
  return out;
}

}  // namespace lcasel
