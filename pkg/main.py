"""
Main application module.
This is the entry point for the HTTP service.
"""
import uvicorn
from fastapi import FastAPI

from app.config.logging_config import configure_logging
from app.config.settings import API_HOST, API_PORT, APP_NAME, APP_VERSION
from app.routes import test_routes

# Send diagnostics to stderr
configure_logging()

# Initialize FastAPI app
app = FastAPI(title=APP_NAME, version=APP_VERSION, docs_url=None, redoc_url=None)

# Include routers
app.include_router(test_routes.router)

if __name__ == "__main__":
    uvicorn.run(app, host=API_HOST, port=API_PORT)
