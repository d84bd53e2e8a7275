#pragma once

#include "downclose/alphabet.hpp"
#include "downclose/cfg.hpp"
#include "downclose/error.hpp"
#include "downclose/json_io.hpp"
#include "downclose/kleene.hpp"
#include "downclose/nfa.hpp"
#include "downclose/oca.hpp"
#include "downclose/oracle.hpp"
#include "downclose/orders.hpp"
#include "downclose/transducer.hpp"
