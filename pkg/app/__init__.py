# app package initializer
__all__ = ["errors", "models", "schemas", "deps", "routers", "services"]
