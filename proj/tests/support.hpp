#pragma once

#include "whs/experiment.hpp"
#include "whs/forms.hpp"
#include "whs/morse.hpp"
#include "whs/torus.hpp"

namespace whstest {

inline whs::MorseFunctionSpec t1_cosine() { return whs::reference_t1_cosine(64).morse; }
inline whs::MorseFunctionSpec t1_double_well() {
    return whs::reference_t1_double_well(64).morse;
}
inline whs::MorseFunctionSpec t1_deep_double_well() {
    return whs::reference_t1_deep_double_well(64).morse;
}
inline whs::MorseFunctionSpec t2_product() { return whs::reference_t2_product(64).morse; }

inline Eigen::VectorXd pt(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

} // namespace whstest
