#pragma once

#include <httplib.h>

#include "worcs/service.hpp"

namespace worcs {

/// Binds the /v1 API of `service` to `server`. `service` must outlive it.
void install_routes(httplib::Server& server, SessionService& service);

}  // namespace worcs
