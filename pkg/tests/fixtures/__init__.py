"""
固定數據：小型需求/靜態特徵行與報表算術的已知答案。
"""
