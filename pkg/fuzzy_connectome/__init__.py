"""Fuzzy connectome diagnosis package"""
