#pragma once

#include "gibbsbp/boundary_law.hpp"
#include "gibbsbp/certify.hpp"
#include "gibbsbp/computation_tree.hpp"
#include "gibbsbp/exact.hpp"
#include "gibbsbp/io.hpp"
#include "gibbsbp/lbp.hpp"
#include "gibbsbp/model.hpp"
#include "gibbsbp/numeric.hpp"
