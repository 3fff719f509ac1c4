#pragma once

#include "dpband/geometry.hpp"
#include "dpband/mesh.hpp"
#include "dpband/forms.hpp"
#include "dpband/eigensolver.hpp"
#include "dpband/floquet.hpp"
#include "dpband/asymptotics.hpp"
#include "dpband/oracles.hpp"
#include "dpband/config.hpp"
#include "dpband/io.hpp"
#include "dpband/parallel.hpp"
