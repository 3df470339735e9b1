#ifndef NETMIG_NETMIG_HPP
#define NETMIG_NETMIG_HPP

#include "netmig/csv.hpp"
#include "netmig/dataset.hpp"
#include "netmig/design.hpp"
#include "netmig/distributions.hpp"
#include "netmig/errors.hpp"
#include "netmig/lsq.hpp"
#include "netmig/panel.hpp"
#include "netmig/region.hpp"
#include "netmig/report.hpp"
#include "netmig/rng.hpp"
#include "netmig/simulate.hpp"
#include "netmig/spatial.hpp"
#include "netmig/weights.hpp"

#endif // NETMIG_NETMIG_HPP
