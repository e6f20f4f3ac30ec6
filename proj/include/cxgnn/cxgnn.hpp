#pragma once

#include "cxgnn/datasets.hpp"
#include "cxgnn/error.hpp"
#include "cxgnn/explainer.hpp"
#include "cxgnn/graph.hpp"
#include "cxgnn/io.hpp"
#include "cxgnn/metrics.hpp"
#include "cxgnn/mlp.hpp"
#include "cxgnn/ncm.hpp"
#include "cxgnn/parallel.hpp"
#include "cxgnn/query.hpp"
#include "cxgnn/rng.hpp"
#include "cxgnn/scm.hpp"
