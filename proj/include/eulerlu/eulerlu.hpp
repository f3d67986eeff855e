#pragma once

#include "eulerlu/common.hpp"
#include "eulerlu/dense.hpp"
#include "eulerlu/eulerian_lu.hpp"
#include "eulerlu/generators.hpp"
#include "eulerlu/graph_io.hpp"
#include "eulerlu/laplacian.hpp"
#include "eulerlu/lu.hpp"
#include "eulerlu/matrix_facts.hpp"
#include "eulerlu/rcdd.hpp"
#include "eulerlu/solver.hpp"
#include "eulerlu/sparsify.hpp"
#include "eulerlu/vertex_elim.hpp"
#include "eulerlu/weighted_sampler.hpp"
#include "eulerlu/work_graph.hpp"
