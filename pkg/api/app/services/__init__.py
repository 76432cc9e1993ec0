# Thin wrappers over tunnelling.physics used by the routers
