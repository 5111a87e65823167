#ifndef DDS_DDS_HPP
#define DDS_DDS_HPP

#include <dds/algorithms.hpp>
#include <dds/archive.hpp>
#include <dds/buffer.hpp>
#include <dds/cma_es.hpp>
#include <dds/common.hpp>
#include <dds/config.hpp>
#include <dds/density.hpp>
#include <dds/domains.hpp>
#include <dds/experiment.hpp>
#include <dds/knn_index.hpp>
#include <dds/maze.hpp>
#include <dds/metrics.hpp>
#include <dds/tessellation.hpp>

#endif
