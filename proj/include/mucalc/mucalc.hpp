#pragma once

#include "mucalc/canonical.hpp"
#include "mucalc/closure.hpp"
#include "mucalc/filtration.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/game.hpp"
#include "mucalc/generator.hpp"
#include "mucalc/hash.hpp"
#include "mucalc/kripke.hpp"
#include "mucalc/oracle.hpp"
#include "mucalc/parallel.hpp"
#include "mucalc/proof.hpp"
#include "mucalc/selftest.hpp"
#include "mucalc/semantics.hpp"
#include "mucalc/text_io.hpp"
