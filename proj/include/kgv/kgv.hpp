#ifndef KGV_KGV_HPP
#define KGV_KGV_HPP

// Offline engine. Live HTTP and subprocess clients are in kgv/http_client.hpp.

#include "kgv/correct_hop.hpp"
#include "kgv/entity_hop.hpp"
#include "kgv/error.hpp"
#include "kgv/graph.hpp"
#include "kgv/graph_io.hpp"
#include "kgv/match_hop.hpp"
#include "kgv/metrics.hpp"
#include "kgv/pipeline.hpp"
#include "kgv/service.hpp"
#include "kgv/text.hpp"
#include "kgv/trace.hpp"
#include "kgv/verify_hop.hpp"
#include "kgv/views.hpp"

#endif  // KGV_KGV_HPP
