#ifndef NGPP_NGPP_HPP
#define NGPP_NGPP_HPP

#include "ngpp/asymptotics.hpp"
#include "ngpp/error.hpp"
#include "ngpp/estimators.hpp"
#include "ngpp/evaluation.hpp"
#include "ngpp/family.hpp"
#include "ngpp/io.hpp"
#include "ngpp/numcore.hpp"
#include "ngpp/objective.hpp"
#include "ngpp/random.hpp"
#include "ngpp/simulation.hpp"

#endif  // NGPP_NGPP_HPP
