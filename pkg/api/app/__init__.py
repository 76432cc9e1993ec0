"""FastAPI application: app factory, routers, schemas and services."""
