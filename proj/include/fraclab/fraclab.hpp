#pragma once

#include <fraclab/energy.hpp>
#include <fraclab/error.hpp>
#include <fraclab/io.hpp>
#include <fraclab/kernels.hpp>
#include <fraclab/parallel.hpp>
#include <fraclab/prefractal.hpp>
#include <fraclab/quadrature.hpp>
#include <fraclab/rational.hpp>
#include <fraclab/sc_construct.hpp>
#include <fraclab/sg_construct.hpp>
#include <fraclab/spectral.hpp>
