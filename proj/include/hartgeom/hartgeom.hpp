#pragma once

// Umbrella header for the full pipeline.

#include "hartgeom/body_fit.hpp"
#include "hartgeom/body_model.hpp"
#include "hartgeom/camera.hpp"
#include "hartgeom/error.hpp"
#include "hartgeom/fft.hpp"
#include "hartgeom/grid.hpp"
#include "hartgeom/kdtree.hpp"
#include "hartgeom/levenberg_marquardt.hpp"
#include "hartgeom/losses.hpp"
#include "hartgeom/manifest.hpp"
#include "hartgeom/marching_cubes.hpp"
#include "hartgeom/markers.hpp"
#include "hartgeom/mesh.hpp"
#include "hartgeom/metrics.hpp"
#include "hartgeom/parallel.hpp"
#include "hartgeom/pnp.hpp"
#include "hartgeom/poisson.hpp"
#include "hartgeom/prediction.hpp"
#include "hartgeom/rng.hpp"
#include "hartgeom/sampling.hpp"
#include "hartgeom/surfels.hpp"
#include "hartgeom/tensor.hpp"
#include "hartgeom/toy_body.hpp"
#include "hartgeom/transform.hpp"
#include "hartgeom/umeyama.hpp"
