"""Módulo de utilidades para la aplicación."""
