# POST /api/v1 endpoints for the simulation
