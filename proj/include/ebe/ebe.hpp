#pragma once

#include "ebe/error.hpp"
#include "ebe/embedding.hpp"
#include "ebe/npy.hpp"
#include "ebe/index.hpp"
#include "ebe/manifest.hpp"
#include "ebe/parallel.hpp"
#include "ebe/knn.hpp"
#include "ebe/serialize.hpp"
#include "ebe/synthetic.hpp"
#include "ebe/evaluation.hpp"
#include "ebe/gallery.hpp"
#include "ebe/index_cache.hpp"
#include "ebe/run_config.hpp"
