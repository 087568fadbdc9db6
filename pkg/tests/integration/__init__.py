"""
集成測試：命令列完整流程與合成面板上的方向性複現（slow / acceptance）。
"""
