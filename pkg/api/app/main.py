import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from tunnelling import __version__
from tunnelling.physics.errors import DomainError, NodeError, TunnellingError

from .routers import simulation

logger = logging.getLogger(__name__)

app = FastAPI(
    title="Waveguide Tunnelling API",
    description="Read-only access to the coupled-waveguide tunnelling model",
    version=__version__,
)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],  # In production, replace with specific origins
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(simulation.router, prefix="/api/v1", tags=["simulation"])


@app.exception_handler(TunnellingError)
async def tunnelling_error_handler(request: Request, exc: TunnellingError):
    """Precondition violations are client errors; anything else a conflict with the model"""
    status = 422 if isinstance(exc, (DomainError, NodeError)) else 409
    logger.warning("%s %s -> %d: %s", request.method, request.url.path, status, exc)
    return JSONResponse(status_code=status, content={"detail": str(exc)})


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "Welcome to the Waveguide Tunnelling API",
        "version": __version__,
        "docs": "/docs"
    }


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "service": "waveguide-tunnelling-api"
    }
