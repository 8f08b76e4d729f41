#pragma once

//! Umbrella header pulling in the whole library: sorted columns and their
//! file format, workload generation, the search structures (binary range
//! search, B+ tree, arithmetic trees with and without contiguous child
//! groups, linearized k-ary search, hierarchically blocked search),
//! decision-program compilation with native rendering, the access tracer,
//! and the benchmark harness.

#include "nitro/bench.hpp"
#include "nitro/binary_search.hpp"
#include "nitro/bplus.hpp"
#include "nitro/codegen.hpp"
#include "nitro/column.hpp"
#include "nitro/csb.hpp"
#include "nitro/css.hpp"
#include "nitro/fast.hpp"
#include "nitro/io.hpp"
#include "nitro/kary.hpp"
#include "nitro/nitrogen.hpp"
#include "nitro/trace.hpp"
#include "nitro/util.hpp"
#include "nitro/workload.hpp"
