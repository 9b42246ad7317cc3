#pragma once

#include "kge/common.hpp"
#include "kge/corpus.hpp"
#include "kge/ann.hpp"
#include "kge/graph.hpp"
#include "kge/tensor.hpp"
#include "kge/encoder.hpp"
#include "kge/sampling.hpp"
#include "kge/train.hpp"
#include "kge/eval.hpp"
#include "kge/graph_io.hpp"
