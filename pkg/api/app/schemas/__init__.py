# Request and response models for the simulation endpoints
