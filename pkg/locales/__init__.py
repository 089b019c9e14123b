"""Locales package"""